"""Synthetic dataset generation with known ground truth.

Data follow the generative model Y = 1 mu + X B + L + e: genotypes are
Binomial(2, maf) dosages, B has a fixed number of nonzero effects, L is an
exactly rank-constrained factor matrix and e is iid Gaussian noise.

Randomness comes from a counter-based Philox generator keyed by a 64-bit
seed, so a scenario is bit-reproducible.  Draw order is fixed: minor allele
frequencies, genotype columns (with monomorphic-column rejection), causal
positions, causal signs, factor matrices U and V, intercepts, noise.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .model import EqtlDataset


@dataclass(frozen=True)
class SimScenario:
    """Parameters of one synthetic dataset."""

    n: int = 50
    p: int = 200
    q: int = 100
    rank_L: int = 3
    n_causal: int = 20
    effect_size: float = 1.0
    noise_sd: float = 0.5
    maf_range: tuple = (0.05, 0.5)
    seed: int = 0

    def __post_init__(self):
        if min(self.n, self.p, self.q) < 1:
            raise ValueError("n, p, q must all be at least 1")
        if not 0 <= self.rank_L <= min(self.n, self.q):
            raise ValueError(f"rank_L must be in [0, min(n, q)], got {self.rank_L}")
        if not 0 <= self.n_causal <= self.p * self.q:
            raise ValueError(f"n_causal must be in [0, p*q], got {self.n_causal}")
        lo, hi = self.maf_range
        if not (0 < lo <= hi <= 0.5):
            raise ValueError(f"maf_range must satisfy 0 < low <= high <= 0.5, got {self.maf_range}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be nonnegative, got {self.noise_sd}")

    def to_dict(self):
        d = asdict(self)
        d["maf_range"] = list(self.maf_range)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "maf_range" in d:
            d["maf_range"] = tuple(d["maf_range"])
        return cls(**d)


@dataclass
class SimTruth:
    """Ground-truth quantities behind a simulated dataset."""

    B_true: np.ndarray
    L_true: np.ndarray
    mu_true: np.ndarray
    causal_pairs: list


def simulate_dataset(sc):
    """Generate (EqtlDataset, SimTruth) from a scenario; deterministic given its seed."""
    rng = np.random.Generator(np.random.Philox(sc.seed))
    n, p, q = sc.n, sc.p, sc.q

    mafs = rng.uniform(sc.maf_range[0], sc.maf_range[1], size=p)
    X = np.empty((n, p))
    for k in range(p):
        col = rng.binomial(2, mafs[k], size=n)
        attempts = 0
        while np.all(col == col[0]):
            attempts += 1
            if attempts > 100:
                raise ValueError(
                    f"SNP column {k} stayed monomorphic after 100 redraws "
                    f"(maf={mafs[k]:.3g}, n={n}); widen maf_range or increase n"
                )
            col = rng.binomial(2, mafs[k], size=n)
        X[:, k] = col

    B = np.zeros((p, q))
    causal_pairs = []
    if sc.n_causal > 0:
        flat = rng.choice(p * q, size=sc.n_causal, replace=False)
        signs = rng.choice(np.array([-1.0, 1.0]), size=sc.n_causal)
        B.flat[flat] = sc.effect_size * signs
        causal_pairs = sorted((int(f) // q, int(f) % q) for f in flat)

    if sc.rank_L > 0:
        u = rng.standard_normal((n, sc.rank_L))
        v = rng.standard_normal((q, sc.rank_L))
        L = u @ v.T
        xb_norm = float(np.linalg.norm(X @ B))
        if xb_norm > 0:
            L *= xb_norm / float(np.linalg.norm(L))
    else:
        L = np.zeros((n, q))

    mu = rng.standard_normal(q)
    e = rng.normal(0.0, sc.noise_sd, size=(n, q))
    Y = mu[None, :] + X @ B + L + e

    ds = EqtlDataset(
        Y=Y,
        X=X,
        gene_ids=[f"gene{j + 1}" for j in range(q)],
        snp_ids=[f"snp{k + 1}" for k in range(p)],
        sample_ids=[f"sample{i + 1}" for i in range(n)],
    )
    truth = SimTruth(B_true=B, L_true=L, mu_true=mu, causal_pairs=causal_pairs)
    return ds, truth
