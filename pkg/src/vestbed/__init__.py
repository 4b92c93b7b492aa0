"""vestbed: a deterministic, hardware-free simulator of a social-robot
sensor-vest software stack.

Subsystems: a virtual-time pub/sub + services core, brokered I2C/SPI buses
with register-level virtual devices, sensing and behavior nodes, a text-level
speech loop, a from-scratch CNN hand-sign pipeline, and an IoT REST gateway.
"""

__version__ = "0.1.0"
