"""Mixture-density head: bivariate Gaussian mixture plus pen-state logits.

The sketcher's output layer emits ``6M + 3`` raw values per step. Links
with built-in constraint satisfaction turn them into distribution
parameters: softmax for the mixture weights, identity for the means,
exp for the standard deviations, tanh for the correlations, and raw
logits for the three pen states.

Everything here is plain numpy so the gradients can be derived by hand
and verified against finite differences. The batched ``nll_and_grad``
is the single source of truth for both the training loss and its
gradient with respect to the raw output values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import InvalidDistribution, InvalidInput
from ..strokes import Stroke5Row

LOG_2PI = float(np.log(2.0 * np.pi))
# floor for 1 - rho^2; only reachable when tanh saturates to exactly +-1
_RHO_GUARD = 1e-10


@dataclass(frozen=True)
class MixtureParams:
    """Distribution over the next stroke-5 row.

    Arrays have one entry per mixture component; ``pen_logits`` has three
    entries ordered (down, up, end).
    """

    pi: np.ndarray
    mu_x: np.ndarray
    mu_y: np.ndarray
    sigma_x: np.ndarray
    sigma_y: np.ndarray
    rho: np.ndarray
    pen_logits: np.ndarray

    @property
    def num_components(self) -> int:
        return len(self.pi)

    def validate(self) -> "MixtureParams":
        if abs(float(self.pi.sum()) - 1.0) > 1e-6 or np.any(self.pi < 0):
            raise InvalidDistribution("mixture weights must be a distribution")
        if np.any(self.sigma_x <= 0) or np.any(self.sigma_y <= 0):
            raise InvalidDistribution("standard deviations must be positive")
        if np.any(np.abs(self.rho) >= 1):
            raise InvalidDistribution("correlations must lie in (-1, 1)")
        arrays = (self.pi, self.mu_x, self.mu_y, self.sigma_x, self.sigma_y, self.rho)
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise InvalidDistribution("non-finite mixture parameter")
        return self


class LossTerms(NamedTuple):
    total: float
    offset: float
    pen: float


def output_width(num_mixtures: int) -> int:
    return 6 * num_mixtures + 3


def split_raw_output(y: np.ndarray, num_mixtures: int) -> MixtureParams:
    """Apply the links to one raw output vector of width 6M + 3."""
    y = np.asarray(y).reshape(-1)
    m = num_mixtures
    if y.shape[0] != output_width(m):
        raise InvalidInput(f"raw output width {y.shape[0]} != {output_width(m)}")
    pi_hat = y[:m]
    pi = _softmax(pi_hat[None, :])[0]
    return MixtureParams(
        pi=pi,
        mu_x=y[m : 2 * m].copy(),
        mu_y=y[2 * m : 3 * m].copy(),
        sigma_x=np.exp(y[3 * m : 4 * m]),
        sigma_y=np.exp(y[4 * m : 5 * m]),
        rho=np.tanh(y[5 * m : 6 * m]),
        pen_logits=y[6 * m :].copy(),
    )


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def bivariate_log_density(
    dx, dy, mu_x, mu_y, sigma_x, sigma_y, rho
) -> np.ndarray:
    """Log density of a bivariate normal, broadcasting over components."""
    u = (dx - mu_x) / sigma_x
    v = (dy - mu_y) / sigma_y
    one_m_rho2 = np.maximum(1.0 - rho * rho, _RHO_GUARD)
    z = u * u + v * v - 2.0 * rho * u * v
    return (
        -LOG_2PI
        - np.log(sigma_x)
        - np.log(sigma_y)
        - 0.5 * np.log(one_m_rho2)
        - z / (2.0 * one_m_rho2)
    )


def mdn_nll(mix: MixtureParams, target: Stroke5Row) -> LossTerms:
    """Negative log-likelihood of one target row under the mixture.

    The offset term is the mixture NLL of (dx, dy); the pen term is the
    categorical cross-entropy of the pen flags. Both are reported
    separately and summed.
    """
    mix.validate()
    t = Stroke5Row(*target)
    log_n = bivariate_log_density(
        t.dx, t.dy, mix.mu_x, mix.mu_y, mix.sigma_x, mix.sigma_y, mix.rho
    )
    a = np.log(np.maximum(mix.pi, 1e-300)) + log_n
    a_max = a.max()
    offset = -(a_max + np.log(np.exp(a - a_max).sum()))
    log_q = _log_softmax(mix.pen_logits[None, :])[0]
    flags = np.array(t.flags(), dtype=float)
    pen = -float(flags @ log_q)
    return LossTerms(float(offset) + pen, float(offset), pen)


def nll_and_grad(
    y: np.ndarray, targets: np.ndarray, weights: np.ndarray, num_mixtures: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-row loss terms and gradient with respect to the raw outputs.

    Args:
      y: (N, 6M+3) raw output values.
      targets: (N, 5) stroke-5 target rows.
      weights: (N,) per-row loss weights (masking and normalization).
      num_mixtures: M.

    Returns:
      (offset_nll, pen_nll, dy): the two unweighted per-row loss terms
      and the gradient of ``sum(weights * (offset + pen))`` w.r.t. ``y``.
    """
    m = num_mixtures
    n = y.shape[0]
    dtype = y.dtype
    pi_hat = y[:, :m]
    mu_x = y[:, m : 2 * m]
    mu_y = y[:, 2 * m : 3 * m]
    s_x = y[:, 3 * m : 4 * m]
    s_y = y[:, 4 * m : 5 * m]
    rho_hat = y[:, 5 * m : 6 * m]
    q = y[:, 6 * m :]

    dx = targets[:, 0:1].astype(dtype)
    dy_t = targets[:, 1:2].astype(dtype)
    flags = targets[:, 2:5].astype(dtype)

    sigma_x = np.exp(s_x)
    sigma_y = np.exp(s_y)
    rho = np.tanh(rho_hat)
    one_m_rho2 = np.maximum(1.0 - rho * rho, _RHO_GUARD).astype(dtype)

    u = (dx - mu_x) / sigma_x
    v = (dy_t - mu_y) / sigma_y
    z = u * u + v * v - 2.0 * rho * u * v

    log_pi = _log_softmax(pi_hat)
    log_n = (
        -LOG_2PI - s_x - s_y - 0.5 * np.log(one_m_rho2) - z / (2.0 * one_m_rho2)
    )
    a = log_pi + log_n
    a_max = a.max(axis=1, keepdims=True)
    lse = a_max + np.log(np.exp(a - a_max).sum(axis=1, keepdims=True))
    offset_nll = -lse[:, 0]

    log_q = _log_softmax(q)
    pen_nll = -(flags * log_q).sum(axis=1)

    # gradients
    r = np.exp(a - lse)  # posterior responsibilities, rows sum to 1
    pi = np.exp(log_pi)
    w = weights[:, None].astype(dtype)

    d_pi_hat = (pi - r) * w
    coef_x = (u - rho * v) / (sigma_x * one_m_rho2)
    coef_y = (v - rho * u) / (sigma_y * one_m_rho2)
    d_mu_x = -r * coef_x * w
    d_mu_y = -r * coef_y * w
    d_s_x = r * (1.0 - u * (u - rho * v) / one_m_rho2) * w
    d_s_y = r * (1.0 - v * (v - rho * u) / one_m_rho2) * w
    d_rho_hat = -r * (rho + u * v - rho * z / one_m_rho2) * w
    d_q = (np.exp(log_q) - flags) * w

    dy = np.empty_like(y)
    dy[:, :m] = d_pi_hat
    dy[:, m : 2 * m] = d_mu_x
    dy[:, 2 * m : 3 * m] = d_mu_y
    dy[:, 3 * m : 4 * m] = d_s_x
    dy[:, 4 * m : 5 * m] = d_s_y
    dy[:, 5 * m : 6 * m] = d_rho_hat
    dy[:, 6 * m :] = d_q
    return offset_nll, pen_nll, dy


def sample_next(mix: MixtureParams, temperature: float, rng: np.random.Generator,
                allow_end: bool = True) -> Stroke5Row:
    """Draw one stroke-5 row from the mixture.

    At temperature 0 the draw is deterministic: the highest-weight
    component's mean and the argmax pen flag, ties broken by lowest
    index. For positive temperatures the component choice and pen flag
    are sampled from temperature-scaled softmaxes and the offset from
    the chosen bivariate Gaussian with variances scaled linearly in the
    temperature.

    ``allow_end=False`` masks out the end flag (used while generating a
    fixed number of continuation strokes).
    """
    if temperature < 0:
        raise InvalidInput(f"temperature must be >= 0, got {temperature}")
    mix.validate()
    logits = mix.pen_logits if allow_end else mix.pen_logits[:2]

    if temperature == 0.0:
        k = int(np.argmax(mix.pi))
        dx, dy = float(mix.mu_x[k]), float(mix.mu_y[k])
        pen = int(np.argmax(logits))
    else:
        log_pi = np.log(np.maximum(mix.pi, 1e-300)) / temperature
        k = int(rng.choice(mix.num_components, p=_softmax(log_pi[None, :])[0]))
        sx = float(mix.sigma_x[k]) * np.sqrt(temperature)
        sy = float(mix.sigma_y[k]) * np.sqrt(temperature)
        rho = float(mix.rho[k])
        z1, z2 = rng.standard_normal(2)
        dx = float(mix.mu_x[k]) + sx * z1
        dy = float(mix.mu_y[k]) + sy * (rho * z1 + np.sqrt(max(1.0 - rho * rho, 0.0)) * z2)
        pen_p = _softmax((logits / temperature)[None, :])[0]
        pen = int(rng.choice(len(logits), p=pen_p))

    one_hot = [0, 0, 0]
    one_hot[pen] = 1
    return Stroke5Row(dx, dy, *one_hot)
