"""Dimensionless single-mode Gaussian profiles.

A mode of frequency ``nu`` (harmonic) or ``alpha`` (inverted) evolved from the
initial width ``B`` has ``U = kappa * u(phi, B)`` and ``V = kappa * v(phi, B)``
with ``phi = nu * t`` and ``kappa = nu / W``.  The functions below are written
in double-angle (harmonic) and sech/tanh (inverted) form: both are bounded for
every real ``phi`` and avoid the removable csc/cot singularities at
``phi = k*pi``.

``v`` is the imaginary part of the Gaussian exponent of the wavefunction that
solves the Schrodinger equation, ``psi ~ exp(-(U + iV) q^2 / 2)``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

MAX_HYPERBOLIC_PHASE = 350.0


class ModeBlock(NamedTuple):
    u: float
    v: float
    u_phi: float
    u_b: float
    v_phi: float
    v_b: float
    # log z with C ~ (B kappa / pi)^(1/4) z^(-1/2), and its derivatives
    logz: complex
    logz_phi: complex
    logz_b: complex


def _sech_tanh(x: float) -> tuple[float, float]:
    e = np.exp(-2.0 * abs(x))
    return 2.0 * np.sqrt(e) / (1.0 + e), np.sign(x) * (1.0 - e) / (1.0 + e)


def harmonic(phi: float, b: float) -> ModeBlock:
    s2, c2 = np.sin(2 * phi), np.cos(2 * phi)
    p, m = b * b + 1.0, b * b - 1.0
    den = p - m * c2  # = 2 (B^2 sin^2 + cos^2)
    u = 2.0 * b / den
    v = -m * s2 / den
    u_phi = -4.0 * b * m * s2 / den**2
    u_b = 2.0 * ((1.0 - b * b) + p * c2) / den**2
    v_phi = -2.0 * m * (p * c2 - m) / den**2
    v_b = -4.0 * b * s2 / den**2

    s, c = np.sin(phi), np.cos(phi)
    z = complex(c, b * s)
    # continuous branch of arg z: it winds together with phi
    theta = np.arctan2(b * s, c) + (phi - np.arctan2(s, c))
    logz = complex(0.5 * np.log(0.5 * den), theta)
    logz_phi = complex(-s, b * c) / z
    logz_b = complex(0.0, s) / z
    return ModeBlock(u, v, u_phi, u_b, v_phi, v_b, logz, logz_phi, logz_b)


def inverted(phi: float, b: float) -> ModeBlock:
    sech2, tanh2 = _sech_tanh(2 * phi)
    p, m = b * b + 1.0, b * b - 1.0
    den = p - m * sech2  # = 2 (B^2 sinh^2 + cosh^2) / cosh(2 phi)
    u = 2.0 * b * sech2 / den
    v = -p * tanh2 / den
    u_phi = -4.0 * b * p * sech2 * tanh2 / den**2
    u_b = 2.0 * sech2 * ((1.0 - b * b) + p * sech2) / den**2
    v_phi = -2.0 * p * sech2 * (p * sech2 - m) / den**2
    v_b = -4.0 * b * tanh2 * sech2 / den**2

    th = np.tanh(phi)
    a = abs(phi)
    # z = cosh + iB sinh = e^{|phi|} ((1 + e^{-2|phi|}) + iB sgn (1 - e^{-2|phi|})) / 2
    e = np.exp(-2.0 * a)
    w = complex(1.0 + e, b * np.sign(phi) * (1.0 - e)) / 2.0
    logz = a + np.log(w)
    denom = complex(1.0, b * th)
    logz_phi = complex(th, b) / denom
    logz_b = complex(0.0, th) / denom
    return ModeBlock(u, v, u_phi, u_b, v_phi, v_b, logz, logz_phi, logz_b)
