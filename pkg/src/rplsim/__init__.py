"""RPL/6LoWPAN discrete-event simulator with a DIO-replay attacker and an
IQR-outlier intrusion detection system."""

__version__ = "0.1.0"
