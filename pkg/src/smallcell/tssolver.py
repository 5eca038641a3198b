"""Optimal tone sharing via Lagrangian dual decomposition.

The relaxed scheduling problem lets every tone be time-shared between links:
maximize the weighted sum rate over shares T[i,k] in [0,1] (summing to at
most 1 per tone) and powers p[i,k] (summing to at most the per-link budget).
Dualizing the power constraints with multipliers lam[i] decouples the
problem per tone: each link's bid for a tone is a closed-form score, the
tone goes to the highest bidder, and a projected subgradient update drives
the multipliers toward the dual optimum.  The relaxation is tight, so the
best dual value is also the time-sharing optimum.

Rates here are in natural-log units per tone use ("nats"); multiply by
tone_bandwidth / ln 2 for bits/s.  Powers are mW, gains 1/mW.
"""

from dataclasses import dataclass, field
import numpy as np

LAM_FLOOR = 1e-12  # evaluation floor, keeps the log bid finite at lam -> 0


@dataclass(frozen=True)
class TSProblem:
    """Gains, weights and budgets of one scheduling instance.

    gains may contain zeros (a zero row entry models a tone the link knows
    nothing about and will never claim); weights and budgets are strictly
    positive.
    """

    gains: np.ndarray     # (I, K), 1/mW, >= 0
    weights: np.ndarray   # (I,), > 0
    budgets: np.ndarray   # (I,), mW, > 0

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.gains, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        b = np.atleast_1d(np.asarray(self.budgets, dtype=float))
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "budgets", b)
        if g.ndim != 2 or w.shape != (g.shape[0],) or b.shape != (g.shape[0],):
            raise ValueError("shape mismatch between gains, weights, budgets")
        if np.any(~np.isfinite(g)) or np.any(g < 0.0):
            raise ValueError("gains must be finite and non-negative")
        if np.any(w <= 0.0) or np.any(b <= 0.0):
            raise ValueError("weights and budgets must be strictly positive")

    @property
    def num_links(self) -> int:
        return self.gains.shape[0]

    @property
    def num_tones(self) -> int:
        return self.gains.shape[1]


@dataclass
class DualIterate:
    """Snapshot of one subgradient iteration."""

    multipliers: np.ndarray    # (I,) lam, 1/mW units of price
    tone_price: np.ndarray     # (K,) per-tone max score
    scores: np.ndarray         # (I, K) all link bids
    dual_value: float
    subgradient: np.ndarray    # (I,) budget minus power the link would draw
    step: float
    iteration: int


@dataclass
class Allocation:
    """Feasible primal point: who uses each tone and with what power."""

    share: np.ndarray    # (I, K) in [0, 1], column sums <= 1
    power: np.ndarray    # (I, K) mW, row sums <= budget
    rate: np.ndarray     # (I,) nats
    objective: float     # weighted sum of rates, nats


@dataclass
class SubgradientResult:
    best_dual: float
    best_multipliers: np.ndarray
    iterations: int
    converged: bool
    final: DualIterate
    dual_trace: np.ndarray
    best_trace: np.ndarray
    step_trace: np.ndarray
    subgrad_norm_trace: np.ndarray
    bound_trace: np.ndarray    # running certified gap (R^2 + G^2 sum a^2) / sum a


def dual_score(theta, g, lam):
    """Best dual bid of a link for one tone at multiplier lam.

    The bid is max over power density d >= 0 of theta*log(1 + g*d) - lam*d,
    the weighted rate the link can buy on the tone minus the price of the
    power it spends, per unit of time share.  The maximizer is
    d = theta/lam - 1/g, giving theta*(log(theta*g/lam) - 1) + lam/g when
    theta*g > lam and 0 otherwise (the link bids nothing on a tone it would
    not power).  Continuous in lam, including at the threshold.

    lam below 1e-12 is floored there, which caps the otherwise divergent
    log; the solver never feeds multipliers below the floor.
    """
    theta_a = np.asarray(theta, dtype=float)
    g_a = np.asarray(g, dtype=float)
    lam_a = np.maximum(np.asarray(lam, dtype=float), LAM_FLOOR)
    tg = theta_a * g_a
    active = tg > lam_a
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(active, tg / lam_a, 1.0)
        val = theta_a * (np.log(ratio) - 1.0) + lam_a / np.where(g_a > 0, g_a, 1.0)
    out = np.where(active, val, 0.0)
    return float(out) if out.ndim == 0 else out


def power_density(problem: TSProblem, lam) -> np.ndarray:
    """Per-unit-share power each link would pour into each tone at lam.

    d[i,k] = (1/g) * (theta*g/lam - 1) clamped at zero; the actual power on
    a tone is the share times this density.
    """
    lam_e = np.maximum(np.asarray(lam, dtype=float), LAM_FLOOR)
    g = problem.gains
    tg = problem.weights[:, None] * g
    active = tg > lam_e[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(active, (tg / lam_e[:, None] - 1.0) / np.where(g > 0, g, 1.0), 0.0)
    return d


def _dual_terms(problem: TSProblem, lam):
    """Scores, densities, per-tone winners, dual value and subgradient."""
    g = problem.gains
    w = problem.weights
    lam_e = np.maximum(lam, LAM_FLOOR)
    tg = w[:, None] * g
    active = tg > lam_e[:, None]
    g_safe = np.where(g > 0, g, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(active, tg / lam_e[:, None], 1.0)
        xi = np.where(active, w[:, None] * (np.log(ratio) - 1.0) + lam_e[:, None] / g_safe, 0.0)
        dens = np.where(active, (ratio - 1.0) / g_safe, 0.0)
    winner = np.argmax(xi, axis=0)          # ties: lowest link index
    cols = np.arange(g.shape[1])
    value = float(xi[winner, cols].sum() + lam_e @ problem.budgets)
    drawn = np.bincount(winner, weights=dens[winner, cols], minlength=g.shape[0])
    subgrad = problem.budgets - drawn
    return xi, dens, winner, value, subgrad


def dual_value(problem: TSProblem, lam):
    """Dual objective at lam.

    Returns (value, subgradient, winner): the per-tone winner takes the tone
    at full share, the subgradient is each link's unused budget (negative
    when the multiplier is too cheap and the link over-draws).
    """
    lam = np.asarray(lam, dtype=float)
    _, _, winner, value, subgrad = _dual_terms(problem, lam)
    return value, subgrad, winner


def default_multipliers(problem: TSProblem) -> np.ndarray:
    """Water-level-scale starting point for the multipliers."""
    med = np.median(problem.gains, axis=1)
    lam0 = problem.weights * med / (1.0 + problem.budgets * med / problem.num_tones)
    return np.maximum(lam0, LAM_FLOOR)


def subgradient_solve(problem: TSProblem, schedule=(1.0, 10.0), max_iters: int = 10000,
                      tol=1e-6, scale_steps: bool = True, lam0=None) -> SubgradientResult:
    """Minimize the dual by projected subgradient with diminishing steps.

    schedule (a, b) sets alpha(t) = a / (b + t), square summable but not
    summable.  With scale_steps each link's step is additionally scaled by
    lam0_i / budget_i so the update speed matches the natural size of its
    multiplier; this is a plain subgradient method in per-link rescaled
    coordinates and the recorded gap bound is computed in those coordinates.

    Multipliers are kept in the box [1e-12, K * weight / budget]; the upper
    edge is a valid bound on the optimizer (a link charged more than that
    could never spend its whole budget), and clipping there keeps a stray
    overshoot from stalling the run.

    Early stop: when the best dual value improves by less than tol (relative)
    over a 100-iteration window.  tol=None disables the check and runs all
    max_iters iterations.

    Returns the best (lowest) dual value seen, the multipliers that achieved
    it, and per-iteration traces including a certified suboptimality bound
    (R^2 + G^2 * sum alpha^2) / sum alpha with R the box diameter from the
    start point and G the largest observed (rescaled) subgradient norm.
    """
    a, b = schedule
    if a <= 0 or b <= 0:
        raise ValueError("schedule constants must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")

    lam = default_multipliers(problem) if lam0 is None else np.asarray(lam0, dtype=float).copy()
    lam_max = problem.num_tones * problem.weights / problem.budgets
    lam = np.clip(lam, LAM_FLOOR, lam_max)
    scale = lam / problem.budgets if scale_steps else np.ones_like(lam)

    # distance bound to any optimizer inside the box, in rescaled coordinates
    radius2 = float(np.sum(np.maximum(lam, lam_max - lam) ** 2 / scale))

    dual_tr = np.empty(max_iters)
    best_tr = np.empty(max_iters)
    step_tr = np.empty(max_iters)
    norm_tr = np.empty(max_iters)
    bound_tr = np.empty(max_iters)

    best = np.inf
    best_lam = lam.copy()
    gmax2 = 0.0
    sum_a = 0.0
    sum_a2 = 0.0
    converged = False
    window = 100
    last = None

    t_used = 0
    for t in range(1, max_iters + 1):
        xi, dens, winner, value, subgrad = _dual_terms(problem, lam)
        if not np.isfinite(value):
            raise FloatingPointError(f"dual value became non-finite at iteration {t}")
        if value < best:
            best = value
            best_lam = lam.copy()

        alpha = a / (b + t)
        sum_a += alpha
        sum_a2 += alpha * alpha
        gmax2 = max(gmax2, float(np.sum(scale * subgrad ** 2)))
        idx = t - 1
        dual_tr[idx] = value
        best_tr[idx] = best
        step_tr[idx] = alpha
        norm_tr[idx] = float(np.linalg.norm(subgrad))
        bound_tr[idx] = (radius2 + gmax2 * sum_a2) / sum_a
        last = DualIterate(multipliers=lam.copy(), tone_price=xi.max(axis=0), scores=xi,
                           dual_value=value, subgradient=subgrad, step=alpha, iteration=t)
        t_used = t

        if tol is not None and t > window:
            improve = best_tr[idx - window] - best
            if improve <= tol * max(abs(best), 1e-30):
                converged = True
                break

        lam = np.clip(lam - alpha * scale * subgrad, LAM_FLOOR, lam_max)

    return SubgradientResult(
        best_dual=best,
        best_multipliers=best_lam,
        iterations=t_used,
        converged=converged,
        final=last,
        dual_trace=dual_tr[:t_used].copy(),
        best_trace=best_tr[:t_used].copy(),
        step_trace=step_tr[:t_used].copy(),
        subgrad_norm_trace=norm_tr[:t_used].copy(),
        bound_trace=bound_tr[:t_used].copy(),
    )


def water_fill(gains, budget: float) -> np.ndarray:
    """Classic water filling: p_k = max(nu - 1/g_k, 0) with sum p = budget.

    The water level nu is solved exactly by sorting: take the m strongest
    tones, nu = (budget + sum of their inverse gains) / m, with m the largest
    count keeping every taken tone above water.  Zero-gain entries never get
    power; if no tone has positive gain there is nothing to fill and the
    call raises.
    """
    g = np.atleast_1d(np.asarray(gains, dtype=float))
    if g.size == 0:
        raise ValueError("empty gain list")
    if budget <= 0.0:
        raise ValueError("budget must be positive")
    usable = np.where(g > 0.0)[0]
    if usable.size == 0:
        raise ValueError("no tone with positive gain")
    inv = 1.0 / g[usable]
    order = np.argsort(inv, kind="stable")
    inv_sorted = inv[order]
    counts = np.arange(1, usable.size + 1)
    nu_candidates = (budget + np.cumsum(inv_sorted)) / counts
    m = int(np.max(np.where(nu_candidates > inv_sorted)[0])) + 1
    nu = nu_candidates[m - 1]
    out = np.zeros_like(g)
    out[usable[order[:m]]] = nu - inv_sorted[:m]
    # strongest tone absorbs the summation rounding so the budget binds exactly
    out[usable[order[0]]] += budget - out.sum()
    return out


def recover_primal(problem: TSProblem, lam) -> Allocation:
    """Feasible allocation from converged multipliers.

    Each tone goes wholly to its winning bidder, then every link water-fills
    its budget over the tones it won.  Feasible by construction; its
    objective lower-bounds the time-sharing optimum.
    """
    lam = np.asarray(lam, dtype=float)
    _, _, winner, _, _ = _dual_terms(problem, lam)
    I, K = problem.gains.shape
    share = np.zeros((I, K))
    share[winner, np.arange(K)] = 1.0
    power = np.zeros((I, K))
    for i in range(I):
        won = np.where((winner == i) & (problem.gains[i] > 0.0))[0]
        if won.size:
            power[i, won] = water_fill(problem.gains[i, won], float(problem.budgets[i]))
    rate = np.log1p(problem.gains * power).sum(axis=1)
    objective = float(problem.weights @ rate)
    return Allocation(share=share, power=power, rate=rate, objective=objective)


def write_trace_csv(result: SubgradientResult, path):
    """Dump the iteration trace for convergence plots."""
    header = "t,dual_value,best_dual,subgrad_norm,alpha"
    t = np.arange(1, result.iterations + 1)
    data = np.column_stack([t, result.dual_trace, result.best_trace,
                            result.subgrad_norm_trace, result.step_trace])
    np.savetxt(path, data, delimiter=",", header=header, comments="")
