"""paxnn: airport passenger activity sequences from WiFi stay traces,
and neural models that predict future activity choices."""

__version__ = "0.1.0"

from .activity_model import (ActivityType, PassengerFeatures, TimeAxis,
                             critical_period_units, one_hot, unit_index)

__all__ = ["ActivityType", "PassengerFeatures", "TimeAxis",
           "critical_period_units", "one_hot", "unit_index", "__version__"]
