"""plantguard: adaptive anomaly detection for industrial control telemetry."""

__version__ = "0.1.0"
