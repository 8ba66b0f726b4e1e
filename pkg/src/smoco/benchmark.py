"""Constants of the four-state, two-input benchmark used throughout the tests.

``REFERENCE_K`` is kept as given in the reference design. It stabilises ``A - B K`` (poles
-9, -12, -15, -18), i.e. it is written for ``u = -K x``; this package uses
``u = K x`` everywhere, so :func:`state_feedback` returns ``-REFERENCE_K``.
"""

import numpy as np

from .model import DisturbanceBounds, PlantModel, build_augmented
from .synth import LmiRegion, supplied_gains

A = np.array([
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.8, -1.5, 0.0],
    [-3.7, 0.7, 0.0, -4.9],
])
B = np.array([[0.0, 0.0], [0.0, 0.0], [-2.0, 0.0], [0.0, 2.5]])
C = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
C_OMEGA = np.diag([2.0, 1.0])
LAMBDA = np.diag([2.0, 0.5])
PHI = np.diag([0.1, 0.01])
X0 = np.array([-200.0, -100.0, 80.0, 60.0])

SWITCH_GAIN = 1000.0
VARSIGMA = 0.01
LOWPASS_TAU = 0.01
OMEGA_BAR = 1.0

OBSERVER_REGION = LmiRegion(np.pi / 3, 20.0, -10.0)
CASCADE_REGION = LmiRegion(np.pi / 3, 10.0, -6.0)

REFERENCE_K = np.array([
    [-135.0, -0.4, -15.75, 0.0],
    [-1.48, 43.48, 0.0, 6.44],
])

REFERENCE_L = np.array([
    [28.7646, 1.6434],
    [-0.0599, 25.4622],
    [22317.0, 4062.2],
    [-1224.4, 225890.0],
    [-548.4370, -100.7284],
    [-9.8, 1804.7],
])

REFERENCE_LCAL = np.array([
    [8.6968, 0.0005, 0.9997, 0.0000, -0.0001, -0.0000],
    [0.0001, 8.6854, 0.0000, 1.0001, 0.0000, 0.0000],
    [0.5435, 2.1518, 7.2862, -0.0619, -347.8314, 0.0113],
    [-2.9929, 4.3330, 0.0063, 3.6058, -0.0192, 1087.0],
    [-0.0137, -0.0336, -0.0023, 0.0015, 8.5957, -0.0003],
    [0.0057, 0.0292, 0.0000, -0.0015, -0.0002, 8.6858],
])

REFERENCE_H1 = np.array([
    [-6.0100e-9, 7.1104e-10],
    [7.1104e-10, 2.2234e-9],
])

REFERENCE_H2 = np.array([
    [1.9193e-4, -7.7971e-6],
    [-7.7971e-6, 8.4519e-4],
])

# given as H3^T (6 x 2)
REFERENCE_H3_T = np.array([
    [1.9193e-4, -7.7907e-6],
    [-7.8048e-6, 8.4519e-4],
    [-1.4183e-6, 1.2944e-7],
    [-7.1583e-8, -3.8856e-7],
    [2.1464e-6, 1.0194e-8],
    [-1.3308e-7, -2.5957e-6],
])

# reported 2-norms over [1, 30] s: |x - xhat|, |x - xtilde|, |u(xhat)|, |u(xtilde)|
TABLE1 = (2.17, 1.83, 53.22, 40.49)


def plant():
    return PlantModel(A=A, B=B, C=C, Lambda=LAMBDA, C_omega=C_OMEGA)


def augmented():
    return build_augmented(plant(), PHI)


def bounds():
    return DisturbanceBounds(omega_bar=OMEGA_BAR, switch_gain=SWITCH_GAIN)


def state_feedback():
    return -REFERENCE_K


def reference_gains():
    return supplied_gains(
        plant(), REFERENCE_L, REFERENCE_LCAL, REFERENCE_H1, REFERENCE_H2,
        REFERENCE_H3_T.T, state_feedback(),
    )
