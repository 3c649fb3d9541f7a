"""Gaussian-mechanism noise for shared parameters, budget scheduling, and a
pairwise additive-masking secure sum.

The secure sum stands in for an encrypted aggregation layer: values are
fixed-point encoded, each client pair derives a cancelling integer mask from
a shared seed, and the server recovers exactly the sum of the encoded
plaintexts without seeing any individual contribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PAPER_SCHEDULE = "paper"
UNIFORM_SCHEDULE = "uniform"
SCHEDULES = (PAPER_SCHEDULE, UNIFORM_SCHEDULE)

DEFAULT_FIXED_POINT_SCALE = 2**20
_MASK_BOUND = 2**40


class ProtocolError(RuntimeError):
    """Secure-sum protocol violation (e.g. a participant's share is missing)."""


@dataclass
class PrivacyConfig:
    """Differential-privacy and secure-aggregation settings for a federation."""

    enabled: bool = False
    epsilon_total: float = 1.0
    delta: float = 1e-5
    sensitivity: float = 1.0
    schedule: str = PAPER_SCHEDULE
    secure_sum: bool = False
    fixed_point_scale: int = DEFAULT_FIXED_POINT_SCALE

    def __post_init__(self):
        if self.epsilon_total <= 0:
            raise ValueError(f"epsilon_total must be > 0, got {self.epsilon_total}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.sensitivity <= 0:
            raise ValueError(f"sensitivity must be > 0, got {self.sensitivity}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        scale = self.fixed_point_scale
        if scale < 1 or (scale & (scale - 1)) != 0:
            raise ValueError(f"fixed_point_scale must be a positive power of two, got {scale}")


def center_noise_sigma(eps_t: float, delta: float, sensitivity: float) -> float:
    """Per-coordinate noise std for shared centers: sigma^2 = 2*D^2*ln(1.25/delta)/eps^2."""
    if eps_t <= 0:
        raise ValueError(f"privacy budget must be > 0, got {eps_t}")
    return float(np.sqrt(2.0 * sensitivity**2 * np.log(1.25 / delta)) / eps_t)


def view_weight_noise_sigma(eps_t: float, delta: float, n_client: int) -> float:
    """Per-coordinate noise std for shared view weights; shrinks with client size."""
    if eps_t <= 0:
        raise ValueError(f"privacy budget must be > 0, got {eps_t}")
    if n_client < 1:
        raise ValueError(f"n_client must be >= 1, got {n_client}")
    return float(np.sqrt(2.0 * np.log(1.25 / delta)) / (eps_t * n_client))


def dp_noise_centers(
    centers: list[np.ndarray],
    eps_t: float,
    delta: float,
    sensitivity: float,
    rng: np.random.Generator,
) -> list[np.ndarray]:
    """Add i.i.d. Gaussian noise to every center coordinate of every view."""
    sigma = center_noise_sigma(eps_t, delta, sensitivity)
    return [a + rng.normal(0.0, sigma, size=a.shape) for a in centers]


def dp_noise_view_weights(
    weights: np.ndarray,
    eps_t: float,
    delta: float,
    n_client: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Perturb view weights, then clip at zero and renormalize to the simplex.

    Gaussian noise can push weights negative; clipping before renormalization
    keeps the simplex invariant. If noise wipes out the whole vector the
    uniform distribution is returned.
    """
    sigma = view_weight_noise_sigma(eps_t, delta, n_client)
    noised = np.clip(weights + rng.normal(0.0, sigma, size=weights.shape), 0.0, None)
    total = noised.sum()
    if total <= 0:
        return np.full_like(weights, 1.0 / weights.shape[0])
    return noised / total


def budget_schedule(epsilon_total: float, rounds: int, kind: str = PAPER_SCHEDULE) -> list[float]:
    """Per-round privacy budgets.

    The default schedule eps_t = (eps_total / sqrt(T)) / sqrt(t + 1) spends
    more budget early and decays monotonically; note its total differs from
    eps_total. The uniform alternative eps_t = eps_total / T is the
    composition-honest baseline.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    if epsilon_total <= 0:
        raise ValueError(f"epsilon_total must be > 0, got {epsilon_total}")
    if kind == UNIFORM_SCHEDULE:
        return [epsilon_total / rounds] * rounds
    if kind != PAPER_SCHEDULE:
        raise ValueError(f"unknown schedule kind {kind!r}")
    root_t = np.sqrt(rounds)
    return [float(epsilon_total / (root_t * np.sqrt(t + 1))) for t in range(rounds)]


@dataclass
class MaskedShare:
    """One client's fixed-point contribution with pairwise masks applied."""

    client_id: int
    values: np.ndarray  # int64


def fixed_point_encode(values: np.ndarray, scale: int) -> np.ndarray:
    return np.rint(np.asarray(values, dtype=float) * scale).astype(np.int64)


def fixed_point_decode(values: np.ndarray, scale: int) -> np.ndarray:
    return np.asarray(values, dtype=np.int64).astype(float) / scale


def _pair_mask(seed: int, low_id: int, high_id: int, size: int) -> np.ndarray:
    rng = np.random.default_rng([seed, low_id, high_id])
    return rng.integers(-_MASK_BOUND, _MASK_BOUND, size=size, dtype=np.int64)


def masked_shares(
    vectors: list[np.ndarray],
    client_ids: list[int],
    seed: int,
    scale: int = DEFAULT_FIXED_POINT_SCALE,
) -> list[MaskedShare]:
    """Fixed-point encode each client vector and apply pairwise cancelling masks.

    For every client pair the lower id adds the shared mask and the higher id
    subtracts it, so the masks across the full participant set sum to zero
    exactly and only the sum of the encodings survives aggregation.
    """
    if len(vectors) != len(client_ids):
        raise ValueError("one vector per client id required")
    if len(set(client_ids)) != len(client_ids):
        raise ValueError("client ids must be unique")
    size = np.asarray(vectors[0]).size
    shares = []
    for vec, cid in zip(vectors, client_ids):
        arr = np.asarray(vec, dtype=float).ravel()
        if arr.size != size:
            raise ValueError("all client vectors must have the same length")
        share = fixed_point_encode(arr, scale)
        for other in client_ids:
            if other == cid:
                continue
            low, high = (cid, other) if cid < other else (other, cid)
            mask = _pair_mask(seed, low, high, size)
            share = share + mask if cid == low else share - mask
        shares.append(MaskedShare(client_id=cid, values=share))
    return shares


def unmask_sum(
    shares: list[MaskedShare],
    expected_ids: list[int],
    scale: int = DEFAULT_FIXED_POINT_SCALE,
) -> np.ndarray:
    """Server-side aggregation: sum of shares decodes to the plaintext sum.

    Aborts if any expected participant is missing, since its pairwise masks
    would not cancel and the sum would be garbage.
    """
    present = sorted(s.client_id for s in shares)
    if present != sorted(expected_ids):
        missing = sorted(set(expected_ids) - set(present))
        raise ProtocolError(f"secure sum aborted, missing clients: {missing}")
    total = np.zeros_like(shares[0].values)
    for share in sorted(shares, key=lambda s: s.client_id):
        total = total + share.values
    return fixed_point_decode(total, scale)


def secure_sum(
    vectors: list[np.ndarray],
    client_ids: list[int],
    seed: int,
    scale: int = DEFAULT_FIXED_POINT_SCALE,
) -> np.ndarray:
    """Exact sum of the fixed-point-encoded client vectors via masking.

    The result equals sum_i round(v_i * scale) / scale; the only deviation
    from the real-valued sum is the encoding quantization, bounded by
    len(vectors)/scale per coordinate.
    """
    shares = masked_shares(vectors, client_ids, seed, scale)
    return unmask_sum(shares, client_ids, scale)
