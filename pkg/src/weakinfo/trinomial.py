"""Incomplete-market (trinomial) optimizer.

With three one-period outcomes and two assets the martingale measure is no
longer unique: the admissible one-period measures form the open segment
between two extremal triples, each with one zero entry.  Products of
extremal choices over the periods give 2^N path measures whose convex hull
contains every martingale path measure, so the budget constraint "price v
under every martingale measure" is equivalent to the 2^N linear budget
equations under the product measures.

The optimal terminal claim solves a 2^N-dimensional dual system: find
multipliers lam_j with

    v = E^nu[ rho^-N (dP^i/dnu) I( sum_j lam_j rho^-N dP^j/dnu ) ]   for all i,

where nu is the anticipated *path* distribution.  The system is the
first-order condition of a strictly convex dual, solved here by damped
Newton with an analytic Jacobian; all sums over the 3^N paths factor
through per-period tensor contractions, so nothing of size 2^N * 3^N is
ever materialized.

The solved claim satisfies every budget equation, hence is attainable, and
its wealth process / holdings follow from any fixed interior measure
(t = 1/2 per period by default).  All three pairwise difference quotients
must then agree; the consistency check is enforced, not assumed.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityError, ConvergenceError, DomainError
from .markets import TRINOMIAL_MAX_PERIODS, TRINOMIAL_OUTCOMES, TrinomialParams
from .utility import Utility

_OUTCOME_INDEX = {"u": 0, "m": 1, "d": 2}


class ReplicationError(ConvergenceError):
    """The solved claim failed the pairwise difference-quotient check."""


# ---------------------------------------------------------------------------
# extremal and product measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtremalPair:
    """The two boundary martingale triples (zero on one branch each).

    p0 zeroes the bottom branch when b < 1+r and the top branch otherwise;
    p1 always zeroes the middle branch.  Entries keep the arithmetic type
    of the inputs, so Fraction parameters give exact triples.
    """

    p0: tuple
    p1: tuple
    middle_below_rho: bool

    def as_matrix(self) -> np.ndarray:
        return np.array([[float(x) for x in self.p0], [float(x) for x in self.p1]])


def extremal_measures(params: TrinomialParams) -> ExtremalPair:
    violations = params.arbitrage_violations()
    if violations:
        raise AdmissibilityError("; ".join(violations))
    a, b, c, rho = params.a, params.b, params.c, params.rho
    if b < rho:
        p0 = ((rho - b) / (a - b), (a - rho) / (a - b), 0 * rho)
    else:
        p0 = (0 * rho, (rho - c) / (b - c), (b - rho) / (b - c))
    p1 = ((rho - c) / (a - c), 0 * rho, (a - rho) / (a - c))
    return ExtremalPair(p0=p0, p1=p1, middle_below_rho=b < rho)


def interior_measure(pair: ExtremalPair, t) -> tuple:
    """Convex combination t p0 + (1-t) p1; interior for t in (0, 1)."""
    if not 0 < t < 1:
        raise ValueError("mixing weight must lie strictly between 0 and 1")
    return tuple(t * x + (1 - t) * y for x, y in zip(pair.p0, pair.p1))


def path_index(path: str) -> int:
    idx = 0
    for step in path:
        idx = idx * 3 + _OUTCOME_INDEX[step]
    return idx


def path_strings(n: int) -> list[str]:
    return ["".join(t) for t in itertools.product(TRINOMIAL_OUTCOMES, repeat=n)]


def choice_strings(n: int) -> list[str]:
    return ["".join(t) for t in itertools.product("01", repeat=n)]


class ProductMeasureSet:
    """The 2^N products of one extremal measure per period.

    Indexed by binary choice strings, character n selecting p0 or p1 for
    period n.  Exact path probabilities are available per (choice, path);
    the dense (2^N, 3^N) matrix is only formed on explicit request.
    """

    def __init__(self, pair: ExtremalPair, n_periods: int):
        if n_periods > TRINOMIAL_MAX_PERIODS:
            raise AdmissibilityError(
                "product-measure count capped at 2^%d" % TRINOMIAL_MAX_PERIODS
            )
        self.pair = pair
        self.n_periods = n_periods

    @property
    def n_measures(self) -> int:
        return 2**self.n_periods

    @property
    def n_paths(self) -> int:
        return 3**self.n_periods

    def choices(self) -> list[str]:
        return choice_strings(self.n_periods)

    def path_probability(self, choice: str, path: str):
        prob = 1
        for ch, step in zip(choice, path):
            triple = self.pair.p0 if ch == "0" else self.pair.p1
            prob = prob * triple[_OUTCOME_INDEX[step]]
        return prob

    def measure_vector(self, choice: str) -> np.ndarray:
        """Float path-probability vector of one product measure."""
        w = self.pair.as_matrix()
        out = np.array([1.0])
        for ch in choice:
            out = np.kron(out, w[int(ch)])
        return out

    def matrix(self) -> np.ndarray:
        """Dense (2^N, 3^N) matrix of all products; small N only."""
        if 6**self.n_periods > 2_000_000:
            raise MemoryError("dense product matrix too large; use the contractions")
        w = self.pair.as_matrix()
        out = np.array([[1.0]])
        for _ in range(self.n_periods):
            out = np.kron(out, w)
        return out


def product_measures(pair: ExtremalPair, n_periods: int) -> ProductMeasureSet:
    return ProductMeasureSet(pair, n_periods)


# ---------------------------------------------------------------------------
# anticipations over paths
# ---------------------------------------------------------------------------

def coerce_path_anticipation(params: TrinomialParams, nu) -> np.ndarray:
    """Accept a path-level vector (base-3 path order) or a {path: mass} dict."""
    n_paths = 3**params.n_periods
    if isinstance(nu, dict):
        arr = np.zeros(n_paths)
        for path, mass in nu.items():
            arr[path_index(path)] = float(mass)
    else:
        arr = np.asarray([float(x) for x in nu], dtype=float)
    if arr.shape != (n_paths,):
        raise ValueError("path anticipation must have 3^N entries")
    if abs(arr.sum() - 1.0) > 1e-9:
        raise ValueError("path anticipation must sum to 1")
    if np.any(arr <= 0):
        raise DomainError("path anticipation must be strictly positive")
    return arr


def product_path_anticipation(params: TrinomialParams, per_period) -> np.ndarray:
    """Path distribution with independent per-period branch probabilities.

    Claims optimal against a product anticipation factor period by period
    and are therefore attainable; they make good hedging fixtures.
    """
    triples = [np.asarray([float(x) for x in tri]) for tri in per_period]
    if len(triples) != params.n_periods:
        raise ValueError("need one branch triple per period")
    for tri in triples:
        if tri.shape != (3,) or abs(tri.sum() - 1.0) > 1e-12 or np.any(tri <= 0):
            raise ValueError("each period needs a strictly positive triple summing to 1")
    out = np.array([1.0])
    for tri in triples:
        out = np.kron(out, tri)
    return out


def lift_terminal_anticipation(
    params: TrinomialParams, nu_terminal, t: float = 0.5
) -> np.ndarray:
    """Spread a terminal-node distribution over paths.

    The terminal law is split among the paths reaching each endpoint in
    proportion to a reference interior martingale measure's conditional
    path weights (mixing weight `t` per period, 1/2 by default).
    """
    from .markets import TrinomialLattice

    lattice = TrinomialLattice(params)
    pair = extremal_measures(params)
    ref = np.array([float(x) for x in interior_measure(pair, t)])
    paths = path_strings(params.n_periods)
    ref_path = np.array(
        [np.prod([ref[_OUTCOME_INDEX[s]] for s in p]) for p in paths]
    )
    nu_terminal = [float(x) for x in nu_terminal]
    if len(nu_terminal) != lattice.n_terminal:
        raise ValueError(
            "terminal anticipation needs %d entries" % lattice.n_terminal
        )
    term_idx = np.array(
        [lattice.terminal_index(*lattice.path_terminal(p)) for p in paths]
    )
    ref_term = np.zeros(lattice.n_terminal)
    np.add.at(ref_term, term_idx, ref_path)
    out = np.array(nu_terminal)[term_idx] * ref_path / ref_term[term_idx]
    return out


# ---------------------------------------------------------------------------
# tensor contractions over the period structure
# ---------------------------------------------------------------------------

def _mode_contract(flat: np.ndarray, mat: np.ndarray, n_axes: int) -> np.ndarray:
    """Apply `mat` along every axis of a flat tensor with n_axes equal axes."""
    size_in = mat.shape[1]
    t = flat.reshape((size_in,) * n_axes)
    for _ in range(n_axes):
        t = np.tensordot(mat, t, axes=([1], [0]))
        t = np.moveaxis(t, 0, -1)
    return t.reshape(-1)


def _mixture_over_paths(lam: np.ndarray, w: np.ndarray, n: int) -> np.ndarray:
    """sum_j lam_j P^j(path) for every path, via per-period contractions."""
    return _mode_contract(lam, w.T, n)


def _aggregate_over_measures(f: np.ndarray, w: np.ndarray, n: int) -> np.ndarray:
    """E^{P^j}[f] for every product measure j."""
    return _mode_contract(f, w, n)


def _gram_matrix(g: np.ndarray, w: np.ndarray, n: int) -> np.ndarray:
    """sum_b P^i(b) P^l(b) g(b) as a (2^N, 2^N) matrix."""
    w2 = np.einsum("jb,lb->jlb", w, w).reshape(4, 3)
    flat = _mode_contract(g, w2, n)
    t = flat.reshape((2, 2) * n)
    perm = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    return t.transpose(perm).reshape(2**n, 2**n)


# ---------------------------------------------------------------------------
# the multiplier system
# ---------------------------------------------------------------------------

@dataclass
class TrinomialSolution:
    params: TrinomialParams
    utility: Utility
    nu: np.ndarray
    lam: np.ndarray
    terminal_wealth: np.ndarray
    value: float
    residuals: np.ndarray
    iterations: int
    residual_history: list = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))


def budget_residuals(
    params: TrinomialParams, terminal_wealth, nu=None
) -> np.ndarray:
    """E^{P^j}[rho^-N V_N] - v for every product measure."""
    pair = extremal_measures(params)
    w = pair.as_matrix()
    n = params.n_periods
    disc = params.rho ** (-n)
    f = disc * np.asarray(terminal_wealth, dtype=float)
    return _aggregate_over_measures(f, w, n) - params.v


def _initial_scale(params, utility, nu, w, n) -> float:
    """Scalar multiplier calibrated on the mean product measure."""
    mean = _mixture_over_paths(np.full(2**n, 1.0 / 2**n), w, n)
    disc = params.rho ** (-n)
    ratio = mean / nu

    def f(mu):
        return float(np.dot(mean, disc * utility.inverse_marginal(mu * disc * ratio))) - params.v

    lo = hi = 1.0
    b = f(1.0)
    if b > 0:
        for _ in range(400):
            hi *= 10.0
            if f(hi) <= 0:
                break
        lo = hi / 10.0
    elif b < 0:
        for _ in range(400):
            lo /= 10.0
            if f(lo) >= 0:
                break
        hi = lo * 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_lambda_system(
    params: TrinomialParams,
    utility: Utility,
    nu,
    *,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> TrinomialSolution:
    """Damped Newton on the 2^N budget equations.

    The iteration minimizes the convex dual v sum(lam) + E^nu[conjugate(y)]
    with y = rho^-N sum_j lam_j dP^j/dnu; its gradient is exactly the
    vector of budget residuals, so backtracking on the dual keeps the
    iteration globally convergent and inside the domain y > 0.
    """
    if params.n_periods > TRINOMIAL_MAX_PERIODS:
        raise AdmissibilityError(
            "trinomial period count capped at %d" % TRINOMIAL_MAX_PERIODS
        )
    nu = coerce_path_anticipation(params, nu)
    pair = extremal_measures(params)
    w = pair.as_matrix()
    n = params.n_periods
    n_measures = 2**n
    rho_n = params.rho**n
    disc = 1.0 / rho_n
    v = params.v

    def split(lam):
        mix = _mixture_over_paths(lam, w, n)
        y = disc * mix / nu
        return mix, y

    def residuals(y):
        f = disc * utility.inverse_marginal(y)
        return _aggregate_over_measures(f, w, n) - v

    def dual(lam, y):
        return v * float(lam.sum()) + float(np.dot(nu, utility.conjugate(y)))

    lam = np.full(n_measures, _initial_scale(params, utility, nu, w, n) / n_measures)
    _, y = split(lam)
    if np.any(y <= 0):
        raise ConvergenceError("initial multiplier scale left the dual domain")
    res = residuals(y)
    g_val = dual(lam, y)
    history = [float(np.max(np.abs(res)))]
    scale = max(1.0, abs(v))

    for iteration in range(1, max_iter + 1):
        if history[-1] <= tol * scale:
            return TrinomialSolution(
                params=params,
                utility=utility,
                nu=nu,
                lam=lam,
                terminal_wealth=np.asarray(utility.inverse_marginal(y), dtype=float),
                value=float(np.dot(nu, utility.evaluate(utility.inverse_marginal(y)))),
                residuals=res,
                iterations=iteration - 1,
                residual_history=history,
            )
        gmat = _gram_matrix(utility.inverse_marginal_prime(y) / nu, w, n)
        jac = disc**2 * gmat
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            step = -res  # gradient fallback; dual gradient is the residual
        t = 1.0
        accepted = False
        res_norm = float(np.linalg.norm(res))
        for _ in range(80):
            cand = lam + t * step
            _, y_cand = split(cand)
            if np.all(y_cand > 0):
                g_cand = dual(cand, y_cand)
                res_cand = residuals(y_cand)
                # global phase: decrease the dual; local phase: once dual
                # improvements drop under float resolution, Newton residual
                # contraction takes over
                if (
                    g_cand < g_val
                    or float(np.linalg.norm(res_cand)) < res_norm
                    or t < 1e-13
                ):
                    lam, y, g_val, res = cand, y_cand, g_cand, res_cand
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            raise ConvergenceError(
                "line search failed at residual %.3e" % history[-1], history
            )
        history.append(float(np.max(np.abs(res))))

    raise ConvergenceError(
        "multiplier system did not converge: residual %.3e after %d iterations"
        % (history[-1], max_iter),
        history,
    )


def optimal_terminal_wealth_trinomial(
    lam, params: TrinomialParams, utility: Utility, nu
) -> np.ndarray:
    """I( sum_j lam_j rho^-N dP^j/dnu ) per path."""
    nu = coerce_path_anticipation(params, nu)
    pair = extremal_measures(params)
    w = pair.as_matrix()
    n = params.n_periods
    mix = _mixture_over_paths(np.asarray(lam, dtype=float), w, n)
    y = params.rho ** (-n) * mix / nu
    if np.any(y <= 0):
        raise DomainError("multiplier mixture left the domain of I on some path")
    return np.asarray(utility.inverse_marginal(y), dtype=float)


# ---------------------------------------------------------------------------
# wealth process and hedging under a fixed interior measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReplicabilityReport:
    ok: bool
    worst_node: str
    worst_gap: float
    tolerance: float


def trinomial_wealth_and_delta(
    params: TrinomialParams,
    terminal_wealth,
    *,
    t: float = 0.5,
    rtol: float = 1e-7,
):
    """Wealth tree and risky holdings on the non-recombining path tree.

    Wealth is the discounted conditional expectation of the terminal claim
    under the interior measure with mixing weight t.  Holdings at a node
    use the top/bottom difference quotient; replicability demands all
    three pairwise quotients agree to `rtol`, and a violation raises
    `ReplicationError` naming the worst node.

    Returns (wealth, deltas, report) where both trees are dicts keyed by
    path prefix strings ("" for the root).
    """
    n = params.n_periods
    rho = params.rho
    pair = extremal_measures(params)
    q = np.array([float(x) for x in interior_measure(pair, t)])
    terminal = np.asarray(terminal_wealth, dtype=float)
    if terminal.shape != (3**n,):
        raise ValueError("terminal wealth must have 3^N entries")

    wealth: dict[str, float] = {}
    for path, value in zip(path_strings(n), terminal):
        wealth[path] = float(value)
    for depth in range(n - 1, -1, -1):
        for prefix in path_strings(depth):
            children = [wealth[prefix + o] for o in TRINOMIAL_OUTCOMES]
            wealth[prefix] = float(np.dot(q, children) / rho)

    mult = {"u": params.a, "m": params.b, "d": params.c}
    deltas: dict[str, float] = {}
    worst_gap, worst_node = 0.0, ""
    for depth in range(n):
        for prefix in path_strings(depth):
            s_node = params.s
            for step in prefix:
                s_node *= mult[step]
            vals = [wealth[prefix + o] for o in TRINOMIAL_OUTCOMES]
            quotients = [
                (vals[0] - vals[1]) / (s_node * (params.a - params.b)),
                (vals[1] - vals[2]) / (s_node * (params.b - params.c)),
                (vals[0] - vals[2]) / (s_node * (params.a - params.c)),
            ]
            spread = max(quotients) - min(quotients)
            scale = max(1.0, abs(quotients[2]), abs(wealth[prefix]) / s_node)
            gap = spread / scale
            if gap > worst_gap:
                worst_gap, worst_node = gap, prefix or "<root>"
            deltas[prefix] = quotients[2]
    report = ReplicabilityReport(
        ok=worst_gap <= rtol, worst_node=worst_node, worst_gap=worst_gap, tolerance=rtol
    )
    if not report.ok:
        raise ReplicationError(
            "pairwise difference quotients disagree at node %r (gap %.3e > %g); "
            "the claim is not replicable" % (worst_node, worst_gap, rtol)
        )
    return wealth, deltas, report


def simulate_trinomial_strategy(
    params: TrinomialParams, deltas: dict[str, float], v0: float | None = None
) -> dict[str, float]:
    """Forward self-financing wealth along every path given nodal holdings."""
    mult = {"u": params.a, "m": params.b, "d": params.c}
    rho = params.rho
    out: dict[str, float] = {}
    for path in path_strings(params.n_periods):
        wealth = params.v if v0 is None else v0
        s = params.s
        for depth, step in enumerate(path):
            d = deltas[path[:depth]]
            bond = (wealth - d * s) * rho
            s = s * mult[step]
            wealth = bond + d * s
        out[path] = wealth
    return out
