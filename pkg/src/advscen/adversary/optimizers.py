"""Query-based black-box maximizers over the box [-1, 1]^dim.

Every optimizer spends its first query on the zero vector (the unperturbed
scenario), then proposes points according to its own rule. All of them
maximize, keep the full query history and stop at ``min(budget, natural
total)`` queries, where the natural total is what their default schedule
would spend.

    opt = BayesianOptimizer(seed=0).fit(lambda d: -np.sum(d**2), dim=4)
    opt.record_.best_value
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist
from sklearn.base import BaseEstimator

from ..rng import as_random_source

_BOX_TOL = 1e-12


class BudgetExhausted(Exception):
    """Raised inside a search when no queries are left; caught by ``fit``."""


class AttackAborted(RuntimeError):
    """The objective raised; ``record`` holds every query completed before it."""

    def __init__(self, message, record):
        super().__init__(message)
        self.record = record


@dataclass
class Query:
    delta: np.ndarray
    value: float
    info: object = None
    wall_time: float = 0.0


@dataclass
class AttackRecord:
    """Query history in evaluation order."""

    algorithm: str
    dim: int
    budget: int
    queries: list = field(default_factory=list)
    aborted: str | None = None

    def __len__(self) -> int:
        return len(self.queries)

    @property
    def values(self) -> np.ndarray:
        return np.array([q.value for q in self.queries], dtype=float)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([q.delta for q in self.queries], dtype=float).reshape(len(self.queries), self.dim)

    @property
    def wall_times(self) -> np.ndarray:
        return np.array([q.wall_time for q in self.queries], dtype=float)

    @property
    def best_index(self) -> int:
        if not self.queries:
            raise ValueError("empty record")
        return int(np.argmax(self.values))

    @property
    def best(self) -> Query:
        return self.queries[self.best_index]

    @property
    def best_value(self) -> float:
        return self.best.value

    @property
    def best_delta(self) -> np.ndarray:
        return self.best.delta

    def best_so_far(self) -> np.ndarray:
        return np.maximum.accumulate(self.values) if self.queries else np.empty(0)

    def same_trace(self, other: "AttackRecord") -> bool:
        """Equality ignoring wall times and attached info."""
        return (
            len(self) == len(other)
            and np.array_equal(self.deltas, other.deltas)
            and np.array_equal(self.values, other.values)
        )


class _Evaluator:
    """Budget-counting wrapper around the objective."""

    def __init__(self, objective, record: AttackRecord):
        self.objective = objective
        self.record = record

    @property
    def remaining(self) -> int:
        return self.record.budget - len(self.record)

    def __call__(self, delta) -> float:
        if self.remaining <= 0:
            raise BudgetExhausted
        delta = np.asarray(delta, dtype=float).reshape(self.record.dim)
        if not np.all(np.abs(delta) <= 1.0 + _BOX_TOL):
            raise AssertionError(f"proposed delta leaves the unit box: max |delta| = {np.abs(delta).max()}")
        delta = np.clip(delta, -1.0, 1.0)
        start = time.perf_counter()
        try:
            out = self.objective(delta.copy())
        except Exception as exc:
            self.record.aborted = f"query {len(self.record) + 1}: {exc!r}"
            raise AttackAborted(f"objective failed at query {len(self.record) + 1}: {exc}", self.record) from exc
        info = None
        if isinstance(out, tuple):
            out, info = out
        value = float(out)
        if not np.isfinite(value):
            self.record.aborted = f"query {len(self.record) + 1}: non-finite value"
            raise AttackAborted(f"objective returned {value} at query {len(self.record) + 1}", self.record)
        self.record.queries.append(Query(delta, value, info, time.perf_counter() - start))
        return value


class BlackBoxOptimizer(BaseEstimator):
    """Shared ``fit`` plumbing; subclasses implement ``_search`` and ``natural_budget``."""

    name = "base"

    def natural_budget(self, dim: int) -> int:
        raise NotImplementedError

    def _search(self, evaluate: _Evaluator, dim: int, rng: np.random.Generator):
        raise NotImplementedError

    def fit(self, objective, dim: int):
        """Maximize ``objective`` over ``[-1, 1]^dim``.

        ``objective(delta)`` returns a number, an object with ``__float__``
        or a ``(value, info)`` pair; ``info`` is stored with the query.
        """
        dim = int(dim)
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        budget = self.natural_budget(dim)
        if self.budget is not None:
            if int(self.budget) < 1:
                raise ValueError(f"budget must be >= 1, got {self.budget}")
            budget = min(budget, int(self.budget))
        record = AttackRecord(self.name, dim, budget)
        evaluate = _Evaluator(objective, record)
        rng = as_random_source(self.seed).stream(f"optimizer/{self.name}")
        try:
            self._search(evaluate, dim, rng)
        except BudgetExhausted:
            pass
        self.record_ = record
        self.best_delta_ = record.best_delta
        self.best_value_ = record.best_value
        return self


def _fit_gp(X, y, lengthscales, noises):
    """Zero-mean SE-kernel GP on standardized targets, hyperparameters by grid marginal likelihood."""
    d2 = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
    best = None
    for ell in lengthscales:
        K0 = np.exp(-0.5 * d2 / ell**2)
        for noise in noises:
            K = K0 + noise * np.eye(len(X))
            try:
                L = np.linalg.cholesky(K)
            except np.linalg.LinAlgError:
                continue
            alpha = np.linalg.solve(L.T, np.linalg.solve(L, y))
            nll = 0.5 * y @ alpha + np.sum(np.log(np.diag(L)))
            if best is None or nll < best[0]:
                best = (nll, ell, noise, L, alpha)
    if best is None:
        raise np.linalg.LinAlgError("no hyperparameter setting gave a positive definite kernel")
    return best[1:]


class BayesianOptimizer(BlackBoxOptimizer):
    """GP surrogate with a squared-exponential kernel and UCB acquisition.

    The length scale starts at the median pairwise distance of the queried
    points and is re-selected by marginal likelihood after every query from
    a grid of multiples of it. The acquisition ``mean + beta * std`` is
    maximized over uniform candidates plus local jitter around the best
    points seen so far.
    """

    name = "BO"

    def __init__(self, budget=75, n_init=20, beta=3.0, n_candidates=2000, n_local=500, seed=0):
        self.budget = budget
        self.n_init = n_init
        self.beta = beta
        self.n_candidates = n_candidates
        self.n_local = n_local
        self.seed = seed

    def natural_budget(self, dim):
        return int(self.budget) if self.budget is not None else 75

    def surrogate(self, X, y):
        """Fitted predictor ``f(Z) -> (mean, std)`` in the units of ``y``."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        mu, sd = y.mean(), y.std()
        if sd == 0.0:
            sd = 1.0
        ys = (y - mu) / sd
        med = np.median(pdist(X)) if len(X) > 1 else 1.0
        med = med if med > 0 else 1.0
        ell, noise, L, alpha = _fit_gp(X, ys, med * np.array([0.25, 0.5, 1.0, 2.0, 4.0]), (1e-6, 1e-4, 1e-2))

        def predict(Z):
            Z = np.atleast_2d(Z)
            d2 = np.sum((Z[:, None, :] - X[None, :, :]) ** 2, axis=-1)
            Ks = np.exp(-0.5 * d2 / ell**2)
            mean = Ks @ alpha
            v = np.linalg.solve(L, Ks.T)
            var = np.maximum(1.0 - np.sum(v**2, axis=0), 0.0)
            return mu + sd * mean, sd * np.sqrt(var)

        return predict

    def _search(self, evaluate, dim, rng):
        X = [np.zeros(dim)]
        y = [evaluate(X[0])]
        for _ in range(int(self.n_init) - 1):
            X.append(rng.uniform(-1.0, 1.0, dim))
            y.append(evaluate(X[-1]))
        while evaluate.remaining > 0:
            predict = self.surrogate(np.array(X), np.array(y))
            cand = [rng.uniform(-1.0, 1.0, (int(self.n_candidates), dim))]
            top = np.argsort(y, kind="stable")[::-1][:5]
            per = max(int(self.n_local) // len(top), 1)
            for i in top:
                cand.append(np.clip(X[i] + rng.normal(0.0, 0.1, (per, dim)), -1.0, 1.0))
            cand = np.concatenate(cand)
            mean, std = predict(cand)
            x = cand[int(np.argmax(mean + self.beta * std))]
            X.append(x)
            y.append(evaluate(x))


class GeneticOptimizer(BlackBoxOptimizer):
    """Elitist GA with fitness-proportional parents and decaying mutation.

    Mutation adds ``U(-z, z)`` noise to each gene with probability ``p``,
    where ``p = max(p_min, p0 * gamma**g)``, ``z = max(z_min, z0 * gamma**g)``
    and ``g`` counts generations without improvement (capped at
    ``max_plateaus``). Every generation evaluates the full population, the
    elite included.
    """

    name = "GA"

    def __init__(self, population=32, generations=50, max_plateaus=25, z0=1.0, z_min=0.3, p0=0.5, p_min=0.1,
                 gamma=0.9, budget=None, seed=0):
        self.population = population
        self.generations = generations
        self.max_plateaus = max_plateaus
        self.z0 = z0
        self.z_min = z_min
        self.p0 = p0
        self.p_min = p_min
        self.gamma = gamma
        self.budget = budget
        self.seed = seed

    def natural_budget(self, dim):
        return int(self.population) * int(self.generations)

    def _search(self, evaluate, dim, rng):
        n = int(self.population)
        pop = rng.uniform(-1.0, 1.0, (n, dim))
        pop[0] = 0.0
        best_value = -np.inf
        plateaus = 0
        for _ in range(int(self.generations)):
            fit = np.array([evaluate(x) for x in pop])
            if fit.max() > best_value:
                best_value = fit.max()
                plateaus = 0
            else:
                plateaus = min(plateaus + 1, int(self.max_plateaus))
            g = plateaus
            p = max(self.p_min, self.p0 * self.gamma**g)
            z = max(self.z_min, self.z0 * self.gamma**g)

            elite = pop[int(np.argmax(fit))].copy()
            shifted = fit - fit.min()
            probs = shifted / shifted.sum() if shifted.sum() > 0 else np.full(n, 1.0 / n)
            parents = rng.choice(n, size=(n - 1, 2), p=probs)
            f1 = shifted[parents[:, 0]]
            f2 = shifted[parents[:, 1]]
            total = f1 + f2
            take_first = np.where(total > 0, f1 / np.where(total > 0, total, 1.0), 0.5)
            mask = rng.random((n - 1, dim)) < take_first[:, None]
            children = np.where(mask, pop[parents[:, 0]], pop[parents[:, 1]])
            mutate = rng.random((n - 1, dim)) < p
            noise = rng.uniform(-z, z, (n - 1, dim))
            children = np.clip(children + mutate * noise, -1.0, 1.0)
            pop = np.vstack([elite[None], children])


class RandomSearchOptimizer(BlackBoxOptimizer):
    """Coordinate-wise random search over a shuffled Cartesian basis.

    Each step tries ``x + eps * e_i``; if that does not improve, it tries
    ``x - eps * e_i``; a move is kept only if it improves. Steps whose
    clipped proposal equals the current point cost no query. Runs until
    the budget is spent.
    """

    name = "RS"

    def __init__(self, epsilon=0.25, budget=100, seed=0):
        self.epsilon = epsilon
        self.budget = budget
        self.seed = seed

    def natural_budget(self, dim):
        return int(self.budget) if self.budget is not None else 100

    def _search(self, evaluate, dim, rng):
        x = np.zeros(dim)
        fx = evaluate(x)
        while True:
            for i in rng.permutation(dim):
                for sign in (1.0, -1.0):
                    cand = x.copy()
                    cand[i] = np.clip(cand[i] + sign * self.epsilon, -1.0, 1.0)
                    if cand[i] == x[i]:
                        continue
                    fc = evaluate(cand)
                    if fc > fx:
                        x, fx = cand, fc
                        break


class NESOptimizer(BlackBoxOptimizer):
    """Antithetic Gaussian gradient estimates with signed projected ascent.

    Each iteration spends ``2 * samples`` queries at ``x +- sigma * u``; the
    final iterate is evaluated once at the end. A budget that is not a
    multiple of that schedule gets a partial last iteration and random
    probes around the final iterate, so exactly ``budget`` queries are spent.
    """

    name = "NES"

    def __init__(self, samples=10, learning_rate=0.25, sigma=0.5, iterations=20, budget=None, seed=0):
        self.samples = samples
        self.learning_rate = learning_rate
        self.sigma = sigma
        self.iterations = iterations
        self.budget = budget
        self.seed = seed

    def natural_budget(self, dim):
        return 1 + 2 * int(self.samples) * int(self.iterations) + 1

    def _search(self, evaluate, dim, rng):
        x = np.zeros(dim)
        evaluate(x)
        for _ in range(int(self.iterations)):
            # a short budget gets a partial last iteration; one query stays reserved for x
            pairs = min(int(self.samples), (evaluate.remaining - 1) // 2)
            if pairs < 1:
                break
            u = rng.standard_normal((pairs, dim))
            grad = np.zeros(dim)
            for ui in u:
                plus = evaluate(np.clip(x + self.sigma * ui, -1.0, 1.0))
                minus = evaluate(np.clip(x - self.sigma * ui, -1.0, 1.0))
                grad += (plus - minus) * ui
            grad /= 2.0 * self.sigma * len(u)
            x = np.clip(x + self.learning_rate * np.sign(grad), -1.0, 1.0)
        evaluate(x)
        _spend_rest(evaluate, x, self.sigma, rng)


def _spend_rest(evaluate, x, scale, rng):
    """Use queries a short budget leaves over on random probes around ``x``."""
    while evaluate.remaining > 0:
        evaluate(np.clip(x + scale * rng.standard_normal(len(x)), -1.0, 1.0))


def eg_step(x, g, lr):
    """Exponentiated-gradient ascent step on [-1, 1]."""
    real = (x + 1.0) / 2.0
    pos = real * np.exp(lr * g)
    neg = (1.0 - real) * np.exp(-lr * g)
    return 2.0 * pos / (pos + neg) - 1.0


class BanditTDOptimizer(BlackBoxOptimizer):
    """Bandit gradient estimation with a time-dependent prior.

    Each iteration probes the objective along ``prior +- exploration * u``
    (two queries), updates the prior by an exponentiated-gradient step and
    moves the iterate by a signed step along the prior. The final iterate is
    evaluated once at the end; any query an odd budget leaves over is a
    random probe around it.
    """

    name = "BanditTD"

    def __init__(self, prior_lr=1.0, learning_rate=0.25, fd_eta=0.5, exploration=1.0, iterations=50,
                 budget=None, seed=0):
        self.prior_lr = prior_lr
        self.learning_rate = learning_rate
        self.fd_eta = fd_eta
        self.exploration = exploration
        self.iterations = iterations
        self.budget = budget
        self.seed = seed

    def natural_budget(self, dim):
        return 1 + 2 * int(self.iterations) + 1

    @staticmethod
    def _unit(v):
        n = np.linalg.norm(v)
        return v / n if n > 0 else v

    def _search(self, evaluate, dim, rng):
        x = np.zeros(dim)
        evaluate(x)
        prior = np.zeros(dim)
        for _ in range(int(self.iterations)):
            if evaluate.remaining < 3:
                break
            u = self._unit(rng.standard_normal(dim)) * self.exploration
            q1 = self._unit(prior + u)
            q2 = self._unit(prior - u)
            l1 = evaluate(np.clip(x + self.fd_eta * q1, -1.0, 1.0))
            l2 = evaluate(np.clip(x + self.fd_eta * q2, -1.0, 1.0))
            deriv = (l1 - l2) / (self.fd_eta * self.exploration)
            prior = eg_step(prior, deriv * u, self.prior_lr)
            x = np.clip(x + self.learning_rate * np.sign(prior), -1.0, 1.0)
        evaluate(x)
        _spend_rest(evaluate, x, self.fd_eta, rng)


ALGORITHMS = {
    "BO": BayesianOptimizer,
    "GA": GeneticOptimizer,
    "RS": RandomSearchOptimizer,
    "NES": NESOptimizer,
    "BanditTD": BanditTDOptimizer,
}


def make_optimizer(algorithm: str, budget=None, seed=0, **hyperparams) -> BlackBoxOptimizer:
    """Optimizer by name (case-insensitive); ``budget=None`` keeps the default schedule."""
    lookup = {k.lower(): v for k, v in ALGORITHMS.items()}
    key = algorithm.lower().replace("-", "").replace("_", "")
    if key == "bandit":
        key = "bandittd"
    if key not in lookup:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {sorted(ALGORITHMS)}")
    opt = lookup[key](seed=seed, **hyperparams)
    if budget is not None:
        opt.set_params(budget=int(budget))
    return opt
