"""Rule-based learning classifier system with QRF-style rule compaction.

Supervised UCS-style training: each step matches one training instance
(instances cycle in seeded shuffled epochs), covers when no rule correctly
matches, updates rule accuracy/fitness (fitness = accuracy^nu), runs a niche
GA on the correct set (tournament selection, uniform crossover, per-feature
mutation, parental subsumption), and trims the population by roulette
deletion when the micro-rule count exceeds the cap.

Rule conditions constrain categorical features to an exact value and
quantitative features to a closed interval; unspecified features store
[-inf, +inf]. Prediction is a fitness-times-numerosity vote among matching
rules; instances no rule matches score 0.5.
"""

from __future__ import annotations

import logging

import numpy as np
from numba import njit

logger = logging.getLogger(__name__)


@njit(cache=True)
def _match_one(spec_mask, lo, hi, x, n_rules):
    out = np.empty(n_rules, dtype=np.bool_)
    for r in range(n_rules):
        ok = True
        for f in range(x.shape[0]):
            if spec_mask[r, f]:
                v = x[f]
                if v < lo[r, f] or v > hi[r, f]:
                    ok = False
                    break
        out[r] = ok
    return out


@njit(cache=True)
def _match_many(spec_mask, lo, hi, X, n_rules):
    n = X.shape[0]
    out = np.zeros((n_rules, n), dtype=np.bool_)
    for r in range(n_rules):
        for i in range(n):
            ok = True
            for f in range(X.shape[1]):
                if spec_mask[r, f]:
                    v = X[i, f]
                    if v < lo[r, f] or v > hi[r, f]:
                        ok = False
                        break
            out[r, i] = ok
    return out


class _Population:
    """Row-per-rule arrays with swap-delete compaction."""

    def __init__(self, capacity: int, n_features: int):
        self.spec = np.zeros((capacity, n_features), dtype=bool)
        self.lo = np.full((capacity, n_features), -np.inf)
        self.hi = np.full((capacity, n_features), np.inf)
        self.action = np.zeros(capacity, dtype=np.int8)
        self.numerosity = np.zeros(capacity, dtype=np.int64)
        self.match_count = np.zeros(capacity, dtype=np.int64)
        self.correct_count = np.zeros(capacity, dtype=np.int64)
        self.accuracy = np.zeros(capacity)
        self.fitness = np.zeros(capacity)
        self.mean_cs = np.ones(capacity)
        self.ga_time = np.zeros(capacity, dtype=np.int64)
        self.init_time = np.zeros(capacity, dtype=np.int64)
        self.n = 0
        self.micro = 0

    def append(self, spec, lo, hi, action, accuracy, fitness, mean_cs, t) -> int:
        r = self.n
        self.spec[r] = spec
        self.lo[r] = lo
        self.hi[r] = hi
        self.action[r] = action
        self.numerosity[r] = 1
        self.match_count[r] = 0
        self.correct_count[r] = 0
        self.accuracy[r] = accuracy
        self.fitness[r] = fitness
        self.mean_cs[r] = mean_cs
        self.ga_time[r] = t
        self.init_time[r] = t
        self.n += 1
        self.micro += 1
        return r

    def remove(self, r: int) -> None:
        last = self.n - 1
        if r != last:
            for arr in (
                self.spec, self.lo, self.hi, self.action, self.numerosity,
                self.match_count, self.correct_count, self.accuracy,
                self.fitness, self.mean_cs, self.ga_time, self.init_time,
            ):
                arr[r] = arr[last]
        self.n = last

    def find_identical(self, spec, lo, hi, action) -> int:
        n = self.n
        if n == 0:
            return -1
        cand = np.flatnonzero(
            (self.action[:n] == action)
            & np.all(self.spec[:n] == spec, axis=1)
            & np.all(self.lo[:n] == lo, axis=1)
            & np.all(self.hi[:n] == hi, axis=1)
        )
        return int(cand[0]) if cand.size else -1


class LcsModel:
    """In-memory LCS payload: trained population plus matching metadata."""

    def __init__(self, pop: _Population, kinds: np.ndarray, ranges: np.ndarray,
                 hyperparameters: dict):
        self.pop = pop
        self.kinds = kinds
        self.ranges = ranges
        self.hyperparameters = dict(hyperparameters)
        self.coverage_misses = 0


def _covering_condition(rng, x, kinds, ranges, p_spec, cover_frac):
    f = x.shape[0]
    spec = rng.random(f) < p_spec
    if not spec.any():
        spec[rng.integers(0, f)] = True
    lo = np.full(f, -np.inf)
    hi = np.full(f, np.inf)
    for j in np.flatnonzero(spec):
        if kinds[j] == 1:
            lo[j] = hi[j] = x[j]
        else:
            half = cover_frac * ranges[j]
            lo[j] = x[j] - half
            hi[j] = x[j] + half
    return spec, lo, hi


def _is_more_general(pop: _Population, parent: int, spec, lo, hi) -> bool:
    p_spec = pop.spec[parent]
    if np.any(p_spec & ~spec):
        return False
    on = p_spec & spec
    return bool(np.all(pop.lo[parent][on] <= lo[on]) and np.all(hi[on] <= pop.hi[parent][on]))


def _roulette_delete(pop: _Population, rng) -> None:
    n = pop.n
    votes = pop.numerosity[:n] / pop.mean_cs[:n]
    total = votes.sum()
    if total <= 0:
        r = int(rng.integers(0, n))
    else:
        cum = np.cumsum(votes)
        r = int(np.searchsorted(cum, rng.random() * total, side="right"))
        r = min(r, n - 1)
    pop.numerosity[r] -= 1
    pop.micro -= 1
    if pop.numerosity[r] == 0:
        pop.remove(r)


def fit(hyperparameters: dict, X: np.ndarray, y: np.ndarray, kinds, seed: int):
    hp = hyperparameters
    iterations = int(hp["training_iterations"])
    max_rules = int(hp["max_rules"])
    p_spec = float(hp["p_spec"])
    nu = float(hp["nu"])
    theta_ga = float(hp["theta_ga"])
    chi = float(hp["crossover_rate"])
    mu = float(hp["mutation_rate"])
    cover_frac = float(hp["covering_range_fraction"])
    mut_frac = float(hp["mutation_range_fraction"])

    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int8)
    kinds = np.asarray(kinds, dtype=np.uint8)
    n, f = X.shape
    ranges = np.zeros(f)
    for j in range(f):
        if kinds[j] == 0:
            ranges[j] = X[:, j].max() - X[:, j].min()

    rng = np.random.default_rng(seed)
    # Transient headroom: one covering insert plus two GA children per step.
    pop = _Population(max_rules + 4, f)
    order = np.empty(0, dtype=np.int64)

    for t in range(iterations):
        pos = t % n
        if pos == 0:
            order = rng.permutation(n)
        i = int(order[pos])
        x = X[i]
        label = int(y[i])

        matched = _match_one(pop.spec[: pop.n], pop.lo[: pop.n], pop.hi[: pop.n], x, pop.n)
        m_idx = np.flatnonzero(matched)
        c_idx = m_idx[pop.action[m_idx] == label]

        if c_idx.size == 0:
            spec, lo, hi = _covering_condition(rng, x, kinds, ranges, p_spec, cover_frac)
            new_r = pop.append(spec, lo, hi, label, accuracy=1.0, fitness=1.0,
                               mean_cs=1.0, t=t)
            m_idx = np.append(m_idx, new_r)
            c_idx = np.append(c_idx, new_r)

        pop.match_count[m_idx] += 1
        pop.correct_count[c_idx] += 1
        pop.accuracy[m_idx] = pop.correct_count[m_idx] / pop.match_count[m_idx]
        pop.fitness[m_idx] = pop.accuracy[m_idx] ** nu

        cs_size = int(pop.numerosity[c_idx].sum())
        pop.mean_cs[c_idx] += (cs_size - pop.mean_cs[c_idx]) / pop.correct_count[c_idx]

        num_c = pop.numerosity[c_idx].astype(float)
        mean_since_ga = float(((t - pop.ga_time[c_idx]) * num_c).sum() / num_c.sum())
        if mean_since_ga > theta_ga:
            pop.ga_time[c_idx] = t
            parents = np.empty(2, dtype=np.int64)
            for side in range(2):
                a, b = rng.integers(0, c_idx.size, size=2)
                pa, pb = int(c_idx[a]), int(c_idx[b])
                parents[side] = pa if pop.fitness[pa] >= pop.fitness[pb] else pb
            children = []
            for p in parents:
                children.append([
                    pop.spec[p].copy(), pop.lo[p].copy(), pop.hi[p].copy()
                ])
            if rng.random() < chi:
                swap = rng.random(f) < 0.5
                for part in range(3):
                    tmp = children[0][part][swap].copy()
                    children[0][part][swap] = children[1][part][swap]
                    children[1][part][swap] = tmp
            off_acc = float((pop.accuracy[parents[0]] + pop.accuracy[parents[1]]) / 2.0)
            for spec, lo, hi in children:
                mut = rng.random(f) < mu
                for j in np.flatnonzero(mut):
                    if not spec[j]:
                        spec[j] = True
                        if kinds[j] == 1:
                            lo[j] = hi[j] = x[j]
                        else:
                            half = cover_frac * ranges[j]
                            lo[j] = x[j] - half
                            hi[j] = x[j] + half
                    elif kinds[j] == 1:
                        spec[j] = False
                        lo[j], hi[j] = -np.inf, np.inf
                    elif rng.random() < 0.5:
                        spec[j] = False
                        lo[j], hi[j] = -np.inf, np.inf
                    else:
                        span = mut_frac * ranges[j]
                        lo[j] += (2.0 * rng.random() - 1.0) * span
                        hi[j] += (2.0 * rng.random() - 1.0) * span
                        if lo[j] > hi[j]:
                            lo[j], hi[j] = hi[j], lo[j]
                if not spec.any():
                    j = int(rng.integers(0, f))
                    spec[j] = True
                    if kinds[j] == 1:
                        lo[j] = hi[j] = x[j]
                    else:
                        half = cover_frac * ranges[j]
                        lo[j] = x[j] - half
                        hi[j] = x[j] + half

                subsumed = False
                for p in parents:
                    if pop.accuracy[p] >= off_acc and _is_more_general(pop, int(p), spec, lo, hi):
                        pop.numerosity[p] += 1
                        pop.micro += 1
                        subsumed = True
                        break
                if not subsumed:
                    twin = pop.find_identical(spec, lo, hi, label)
                    if twin >= 0:
                        pop.numerosity[twin] += 1
                        pop.micro += 1
                    else:
                        pop.append(spec, lo, hi, label, accuracy=off_acc,
                                   fitness=off_acc**nu, mean_cs=float(cs_size), t=t)

        # Trim after all insertions so swap-deletes cannot invalidate the
        # parent/correct-set indices used above.
        while pop.micro > max_rules:
            _roulette_delete(pop, rng)

    model = LcsModel(pop, kinds, ranges, hp)
    payload = {"model": model}
    return payload, _native_importance(model)


def _native_importance(model: LcsModel) -> np.ndarray:
    pop = model.pop
    n = pop.n
    weights = pop.fitness[:n] * pop.numerosity[:n]
    importance = (pop.spec[:n].astype(float) * weights[:, None]).sum(axis=0)
    total = importance.sum()
    return importance / total if total > 0 else importance


def predict_proba(payload: dict, X: np.ndarray) -> np.ndarray:
    model: LcsModel = payload["model"]
    pop = model.pop
    n_rules = pop.n
    Xc = np.ascontiguousarray(X, dtype=np.float64)
    scores = np.full(X.shape[0], 0.5)
    if n_rules == 0:
        model.coverage_misses += X.shape[0]
        return scores
    matches = _match_many(pop.spec[:n_rules], pop.lo[:n_rules], pop.hi[:n_rules],
                          Xc, n_rules)
    votes = pop.fitness[:n_rules] * pop.numerosity[:n_rules]
    vote1 = votes * (pop.action[:n_rules] == 1)
    denom = matches.T @ votes
    numer = matches.T @ vote1
    covered = matches.any(axis=0)
    model.coverage_misses += int((~covered).sum())
    usable = denom > 0
    scores[usable] = numer[usable] / denom[usable]
    return scores


def qrf_compact(payload: dict, X: np.ndarray, y: np.ndarray) -> tuple[dict, np.ndarray]:
    """Two-stage rule compaction; returns (payload, native importance).

    Stage 1 drops never-matched rules and rules with accuracy <= 0.5. Stage 2
    walks survivors by descending fitness*numerosity, retaining a rule only if
    it correctly covers a training instance no prior retained rule covers,
    stopping once every correctly-coverable instance is covered.
    """
    model: LcsModel = payload["model"]
    pop = model.pop
    n = pop.n
    keep = np.flatnonzero((pop.match_count[:n] > 0) & (pop.accuracy[:n] > 0.5))
    if keep.size == 0:
        logger.warning("QRF stage 1 removed every rule; keeping the single fittest rule")
        keep = np.array([int(np.argmax(pop.fitness[:n]))]) if n else np.empty(0, dtype=int)

    order = sorted(keep.tolist(), key=lambda r: (-pop.fitness[r] * pop.numerosity[r], r))
    Xc = np.ascontiguousarray(X, dtype=np.float64)
    matches = _match_many(pop.spec[order], pop.lo[order], pop.hi[order], Xc, len(order))
    correct = matches & (pop.action[order][:, None] == np.asarray(y, dtype=np.int8)[None, :])
    coverable = correct.any(axis=0)
    target = int(coverable.sum())

    covered = np.zeros(X.shape[0], dtype=bool)
    retained: list[int] = []
    for pos, r in enumerate(order):
        gains = correct[pos] & ~covered
        if gains.any():
            retained.append(r)
            covered |= correct[pos]
            if int(covered.sum()) >= target:
                break
    if not retained:
        retained = [order[0]]

    new_pop = _Population(len(retained) + 2, pop.spec.shape[1])
    for r in retained:
        idx = new_pop.append(
            pop.spec[r].copy(), pop.lo[r].copy(), pop.hi[r].copy(),
            int(pop.action[r]), float(pop.accuracy[r]), float(pop.fitness[r]),
            float(pop.mean_cs[r]), int(pop.init_time[r]),
        )
        new_pop.numerosity[idx] = pop.numerosity[r]
        new_pop.match_count[idx] = pop.match_count[r]
        new_pop.correct_count[idx] = pop.correct_count[r]
        new_pop.micro += int(pop.numerosity[r]) - 1
    compact = LcsModel(new_pop, model.kinds, model.ranges, model.hyperparameters)
    return {"model": compact}, _native_importance(compact)


def rule_count(payload: dict) -> int:
    return payload["model"].pop.n


def payload_to_json(payload: dict) -> dict:
    model: LcsModel = payload["model"]
    pop = model.pop
    rules = []
    for r in range(pop.n):
        spec_idx = np.flatnonzero(pop.spec[r])
        rules.append({
            "features": spec_idx.tolist(),
            "lo": pop.lo[r][spec_idx].tolist(),
            "hi": pop.hi[r][spec_idx].tolist(),
            "action": int(pop.action[r]),
            "numerosity": int(pop.numerosity[r]),
            "match_count": int(pop.match_count[r]),
            "correct_count": int(pop.correct_count[r]),
            "accuracy": float(pop.accuracy[r]),
            "fitness": float(pop.fitness[r]),
            "init_timestamp": int(pop.init_time[r]),
        })
    return {
        "rules": rules,
        "kinds": model.kinds.tolist(),
        "ranges": model.ranges.tolist(),
        "hyperparameters": model.hyperparameters,
        "n_features": int(pop.spec.shape[1]),
    }


def payload_from_json(payload: dict) -> dict:
    f = int(payload["n_features"])
    rules = payload["rules"]
    pop = _Population(len(rules) + 2, f)
    for rule in rules:
        idx = pop.append(
            np.zeros(f, dtype=bool), np.full(f, -np.inf), np.full(f, np.inf),
            int(rule["action"]), float(rule["accuracy"]), float(rule["fitness"]),
            1.0, int(rule["init_timestamp"]),
        )
        for k, j in enumerate(rule["features"]):
            pop.spec[idx, j] = True
            pop.lo[idx, j] = rule["lo"][k]
            pop.hi[idx, j] = rule["hi"][k]
        pop.numerosity[idx] = int(rule["numerosity"])
        pop.match_count[idx] = int(rule["match_count"])
        pop.correct_count[idx] = int(rule["correct_count"])
        pop.micro += int(rule["numerosity"]) - 1
    model = LcsModel(
        pop,
        np.array(payload["kinds"], dtype=np.uint8),
        np.array(payload["ranges"], dtype=float),
        dict(payload["hyperparameters"]),
    )
    return {"model": model}
