"""Data generation: identically distributed samplers, sparse corruption,
ground-truth polynomial evaluation, and dataset assembly.

Three samplers produce m-by-d matrices of identically distributed rows:
i.i.d. uniform, a moving-average filter of i.i.d. noise (exponentially
strongly mixing), and a finite-state uniformly ergodic Markov chain mapped
into the cube. Corruption is row-sparse: either additive rows on the inputs
or scalar spikes on the outputs. All randomness flows through numpy's
seedable Generator, so every function here is a pure function of its
arguments and seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from robustfit.dictionary import MultiIndex

__all__ = [
    "GroundTruthPolynomial",
    "make_polynomial",
    "CorruptionSpec",
    "CorruptionResult",
    "Dataset",
    "MarkovChainModel",
    "gen_iid",
    "gen_alpha_mixing",
    "gen_markov_chain",
    "markov_chain_model",
    "simulate_markov_chain",
    "inject_corruption",
    "evaluate_polynomial",
    "add_model_mismatch",
    "coefficient_vector",
    "build_dataset",
    "dataset_to_csv",
    "dataset_from_csv",
]

# Moving-average filter weights: x_i = w0 z_i + w1 z_{i+1} + w2 z_{i+2} + w3 z_{i+3}.
_MA_WEIGHTS = (1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0)


def _rng(seed) -> np.random.Generator:
    """Accept an int seed, a SeedSequence, or a ready Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class GroundTruthPolynomial:
    """Sparse polynomial Sum_alpha c_alpha x^alpha as explicit terms."""

    terms: tuple[tuple[MultiIndex, float], ...]
    dim: int
    max_degree: int

    def __post_init__(self):
        seen = set()
        for alpha, _ in self.terms:
            if alpha.dim != self.dim:
                raise ValueError(
                    f"term {alpha} has dimension {alpha.dim}, expected {self.dim}"
                )
            if alpha.degree > self.max_degree:
                raise ValueError(
                    f"term {alpha} has degree {alpha.degree} > {self.max_degree}"
                )
            if alpha.exponents in seen:
                raise ValueError(f"duplicate term {alpha}")
            seen.add(alpha.exponents)

    @property
    def sparsity(self) -> int:
        return len(self.terms)


def make_polynomial(term_map: dict, dim: int, max_degree: int) -> GroundTruthPolynomial:
    """Build a polynomial from {exponent tuple: coefficient}."""
    terms = tuple(
        (MultiIndex(tuple(exps)), float(coef)) for exps, coef in term_map.items()
    )
    return GroundTruthPolynomial(terms=terms, dim=dim, max_degree=max_degree)


@dataclass(frozen=True)
class CorruptionSpec:
    """Row-sparse corruption: `sparsity` rows get magnitude-`magnitude` hits.

    target="outputs" adds one uniform [-H, H] scalar to y per corrupted row;
    target="inputs" adds a full uniform [-H, H]^d row to the data matrix.
    """

    sparsity: int
    magnitude: float = 2.0
    target: str = "outputs"

    def __post_init__(self):
        if self.sparsity < 0:
            raise ValueError(f"corruption sparsity must be >= 0, got {self.sparsity}")
        if self.magnitude <= 0:
            raise ValueError(f"corruption magnitude must be > 0, got {self.magnitude}")
        if self.target not in ("inputs", "outputs"):
            raise ValueError(f"target must be 'inputs' or 'outputs', got {self.target!r}")


@dataclass(frozen=True)
class CorruptionResult:
    """Output of inject_corruption.

    U is the (possibly perturbed) data matrix, theta = U - X row-sparse,
    e the additive output spikes (zeros unless target="outputs"), y the
    corrupted outputs (None when no y was supplied), support the corrupted
    row indices in increasing order.
    """

    U: np.ndarray
    theta: np.ndarray
    support: np.ndarray
    e: np.ndarray
    y: np.ndarray | None


@dataclass(frozen=True)
class MarkovChainModel:
    """Finite-state chain with strictly positive transitions.

    Strict positivity gives a one-step Doeblin minorization
    P(x, A) >= doeblin_lambda * uniform(A) with
    doeblin_lambda = n_states * min(P), so the chain is uniformly ergodic
    with k0 = 1. States are embedded in the cube via state_points.
    """

    transition: np.ndarray
    stationary: np.ndarray
    state_points: np.ndarray

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def doeblin_lambda(self) -> float:
        return float(self.n_states * self.transition.min())

    @property
    def k0(self) -> int:
        return 1


@dataclass(frozen=True)
class Dataset:
    """One generated problem instance ready for dictionary assembly.

    y already contains any output corruption (epsilon) and model mismatch.
    Invariants: U == X_clean + theta; theta is zero outside corruption rows.
    """

    X_clean: np.ndarray
    U: np.ndarray
    y: np.ndarray
    corruption_support: np.ndarray
    theta: np.ndarray
    epsilon: np.ndarray
    generator_tag: str
    seed: int


def gen_iid(m: int, d: int, bound: float, seed) -> np.ndarray:
    """m-by-d matrix of i.i.d. uniform [-bound, bound] entries."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if bound <= 0:
        raise ValueError(f"bound must be > 0, got {bound}")
    return _rng(seed).uniform(-bound, bound, size=(m, d))


def gen_alpha_mixing(m: int, d: int, seed) -> np.ndarray:
    """Stationary moving-average process with geometrically decaying memory.

    x_i = z_i/16 + z_{i+1}/8 + z_{i+2}/4 + z_{i+3}/2 with z_i i.i.d.
    uniform on [-1, 1]^d (independent coordinates). Rows are bounded by
    15/16 in sup norm and rows more than 3 apart are independent.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    z = _rng(seed).uniform(-1.0, 1.0, size=(m + 3, d))
    x = np.zeros((m, d))
    for lag, w in enumerate(_MA_WEIGHTS):
        x += w * z[lag : lag + m]
    return x


def markov_chain_model(d: int, n_states: int, seed) -> MarkovChainModel:
    """Random strictly positive row-stochastic chain with its stationary law.

    The stationary distribution is found by fixed-point iteration on
    pi <- pi P; failure to reach an l1 residual of 1e-12 raises.
    """
    if n_states < 2:
        raise ValueError(f"n_states must be >= 2, got {n_states}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    rng = _rng(seed)
    # entries in [0.1, 1] before normalization keep the chain well away
    # from reducibility and make the Doeblin constant non-trivial
    raw = rng.uniform(0.1, 1.0, size=(n_states, n_states))
    transition = raw / raw.sum(axis=1, keepdims=True)
    pi = np.full(n_states, 1.0 / n_states)
    for _ in range(10000):
        nxt = pi @ transition
        if np.abs(nxt - pi).sum() <= 1e-12:
            pi = nxt
            break
        pi = nxt
    else:
        raise RuntimeError(
            "stationary distribution did not converge to 1e-12 within 10000 iterations"
        )
    pi = pi / pi.sum()
    state_points = rng.uniform(-1.0, 1.0, size=(n_states, d))
    return MarkovChainModel(transition=transition, stationary=pi, state_points=state_points)


def simulate_markov_chain(model: MarkovChainModel, m: int, seed) -> np.ndarray:
    """Run the chain for m steps from its stationary law; return states."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = _rng(seed)
    cum = np.cumsum(model.transition, axis=1)
    cum[:, -1] = 1.0
    states = np.empty(m, dtype=np.int64)
    states[0] = rng.choice(model.n_states, p=model.stationary)
    draws = rng.random(m - 1) if m > 1 else np.empty(0)
    for i in range(1, m):
        states[i] = np.searchsorted(cum[states[i - 1]], draws[i - 1], side="right")
    return states


def gen_markov_chain(m: int, d: int, n_states: int, seed) -> np.ndarray:
    """m-by-d matrix from a stationary uniformly ergodic finite chain.

    A fresh random chain is built from the seed, started from its
    stationary distribution, and each visited state is mapped to its fixed
    random point in [-1, 1]^d.
    """
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    model_seed, path_seed = seq.spawn(2)
    model = markov_chain_model(d, n_states, model_seed)
    states = simulate_markov_chain(model, m, path_seed)
    return model.state_points[states]


def inject_corruption(
    X: np.ndarray, spec: CorruptionSpec, seed, y: np.ndarray | None = None
) -> CorruptionResult:
    """Corrupt `sparsity` uniformly chosen rows of a clean sample.

    target="inputs" adds i.i.d. uniform [-H, H] entries to the chosen rows
    of X; target="outputs" adds one uniform [-H, H] scalar per chosen row
    to y (which must then be supplied). Rows outside the support are
    returned untouched.
    """
    X = np.asarray(X, dtype=float)
    m = X.shape[0]
    if spec.sparsity > m:
        raise ValueError(f"corruption sparsity {spec.sparsity} exceeds m={m}")
    rng = _rng(seed)
    support = np.sort(rng.choice(m, size=spec.sparsity, replace=False))
    theta = np.zeros_like(X)
    e = np.zeros(m)
    if spec.target == "inputs":
        theta[support] = rng.uniform(-spec.magnitude, spec.magnitude, size=(spec.sparsity, X.shape[1]))
        y_out = None if y is None else np.asarray(y, dtype=float).copy()
    else:
        if y is None:
            raise ValueError("output-targeted corruption needs the output vector y")
        e[support] = rng.uniform(-spec.magnitude, spec.magnitude, size=spec.sparsity)
        y_out = np.asarray(y, dtype=float) + e
    return CorruptionResult(U=X + theta, theta=theta, support=support, e=e, y=y_out)


def evaluate_polynomial(f: GroundTruthPolynomial, X: np.ndarray) -> np.ndarray:
    """Evaluate the sparse polynomial on every row of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != f.dim:
        raise ValueError(f"X has shape {X.shape}, polynomial expects (*, {f.dim})")
    y = np.zeros(X.shape[0])
    for alpha, coef in f.terms:
        term = np.ones(X.shape[0])
        for j, a in enumerate(alpha.exponents):
            if a:
                term = term * X[:, j] ** a
        y += coef * term
    return y


def add_model_mismatch(y: np.ndarray, X: np.ndarray, epsilon: float) -> np.ndarray:
    """Perturb outputs by epsilon * sin(2 pi x_1) rowwise."""
    y = np.asarray(y, dtype=float)
    if epsilon == 0.0:
        return y.copy()
    return y + epsilon * np.sin(2.0 * np.pi * np.asarray(X, dtype=float)[:, 0])


def coefficient_vector(f: GroundTruthPolynomial, indices: list[MultiIndex]) -> np.ndarray:
    """Express the polynomial in a dictionary's column order.

    Raises if a term's multi-index is missing from the dictionary.
    """
    pos = {mi.exponents: j for j, mi in enumerate(indices)}
    c = np.zeros(len(indices))
    for alpha, coef in f.terms:
        if alpha.exponents not in pos:
            raise ValueError(f"term {alpha} not present in dictionary columns")
        c[pos[alpha.exponents]] = coef
    return c


def build_dataset(
    truth: GroundTruthPolynomial,
    m: int,
    generator: str,
    corruption: CorruptionSpec,
    seed,
    mismatch_epsilon: float = 0.0,
    iid_bound: float = 1.0,
    n_states: int = 5,
) -> Dataset:
    """Full generation pipeline: sample, evaluate, corrupt, perturb.

    generator is one of "iid", "alpha_mixing", "markov". The seed is split
    into independent streams for sampling and corruption so changing the
    corruption spec never changes the clean data.
    """
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    data_seed, corr_seed = seq.spawn(2)
    if generator == "iid":
        X = gen_iid(m, truth.dim, iid_bound, data_seed)
    elif generator == "alpha_mixing":
        X = gen_alpha_mixing(m, truth.dim, data_seed)
    elif generator == "markov":
        X = gen_markov_chain(m, truth.dim, n_states, data_seed)
    else:
        raise ValueError(f"unknown generator {generator!r}")
    y_clean = evaluate_polynomial(truth, X)
    res = inject_corruption(X, corruption, corr_seed, y=y_clean)
    # input-targeted corruption leaves the outputs clean by construction
    y = add_model_mismatch(res.y, X, mismatch_epsilon)
    seed_int = int(seq.entropy) if isinstance(seq.entropy, int) else 0
    return Dataset(
        X_clean=X,
        U=res.U,
        y=y,
        corruption_support=res.support,
        theta=res.theta,
        epsilon=res.e,
        generator_tag=generator,
        seed=seed_int,
    )


def _fmt(x: float) -> str:
    """Shortest decimal that round-trips to the same float."""
    return repr(float(x))


def dataset_to_csv(ds: Dataset) -> str:
    """Serialize to the x1..xd,u1..ud,y,corrupted schema with \\n endings."""
    d = ds.X_clean.shape[1]
    header = (
        [f"x{j + 1}" for j in range(d)]
        + [f"u{j + 1}" for j in range(d)]
        + ["y", "corrupted"]
    )
    corrupted = np.zeros(ds.X_clean.shape[0], dtype=int)
    corrupted[ds.corruption_support] = 1
    lines = [",".join(header)]
    for i in range(ds.X_clean.shape[0]):
        cells = (
            [_fmt(v) for v in ds.X_clean[i]]
            + [_fmt(v) for v in ds.U[i]]
            + [_fmt(ds.y[i]), str(corrupted[i])]
        )
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def dataset_from_csv(text: str) -> Dataset:
    """Parse the x1..xd,u1..ud,y,corrupted schema back into a Dataset.

    The output-spike decomposition is not recoverable from the file, so
    epsilon comes back as zeros; the support comes from the corrupted flag.
    """
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise ValueError("empty dataset file")
    header = lines[0].split(",")
    if header[-2:] != ["y", "corrupted"]:
        raise ValueError(f"unexpected header tail {header[-2:]}, want ['y', 'corrupted']")
    d, rem = divmod(len(header) - 2, 2)
    if rem or d < 1:
        raise ValueError(f"header has {len(header)} columns, cannot split into x/u blocks")
    expect = [f"x{j + 1}" for j in range(d)] + [f"u{j + 1}" for j in range(d)]
    if header[: 2 * d] != expect:
        raise ValueError(f"unexpected header columns {header[:2 * d]}")
    rows = []
    for k, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(header):
            raise ValueError(f"line {k}: expected {len(header)} cells, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise ValueError(f"line {k}: {exc}") from None
    arr = np.asarray(rows)
    X = arr[:, :d]
    U = arr[:, d : 2 * d]
    y = arr[:, 2 * d]
    flag = arr[:, 2 * d + 1].astype(int)
    if not np.isin(flag, (0, 1)).all():
        raise ValueError("corrupted column must be 0 or 1")
    return Dataset(
        X_clean=X,
        U=U,
        y=y,
        corruption_support=np.nonzero(flag)[0],
        theta=U - X,
        epsilon=np.zeros(arr.shape[0]),
        generator_tag="csv",
        seed=0,
    )
