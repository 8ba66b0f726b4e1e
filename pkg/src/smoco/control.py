"""Observer-based compensation control ``u = K_bar [x_est; d_est]``."""

from dataclasses import dataclass
from enum import Enum

import numpy as np


class EstimateSource(str, Enum):
    SMO = "SMO"            # first-layer estimate
    SMO_CO = "SMO_CO"      # cascade estimate
    TRUE_STATE = "TRUE_STATE"  # diagnostic: [x; d]

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).upper().replace("-", "_")
        aliases = {"SMOCO": "SMO_CO", "CO": "SMO_CO", "TRUE": "TRUE_STATE"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class ControlLaw:
    K_bar: np.ndarray
    source: EstimateSource = EstimateSource.SMO

    @classmethod
    def from_gains(cls, gains, source="SMO"):
        return cls(np.asarray(gains.K_bar, dtype=float), EstimateSource.parse(source))


def control_input(law, state_estimate):
    est = np.asarray(state_estimate, dtype=float).ravel()
    if est.shape[0] != law.K_bar.shape[1]:
        raise ValueError(f"estimate has length {est.shape[0]}, expected {law.K_bar.shape[1]}")
    return law.K_bar @ est
