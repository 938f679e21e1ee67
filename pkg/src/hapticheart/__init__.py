"""Software-simulated mid-air haptic rig with a heartbeat-driven hologram."""

__version__ = "0.1.0"
