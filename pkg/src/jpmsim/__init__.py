"""Simulator and calibration toolkit for photon-counter qubit measurement."""

from .device import DeviceParams, derive_all, load_device
from .model import CalibrationRecord, ErrorModel

__version__ = "0.1.0"

__all__ = ["DeviceParams", "derive_all", "load_device",
           "CalibrationRecord", "ErrorModel", "__version__"]
