"""Monte-Carlo tree search over decision/observation histories.

The tree alternates two node kinds: history nodes (rooted at the current
real history) whose children are the nine decisions, and decision nodes
whose children are discretized-observation bins.  Each planning call runs
a fixed number of root simulations; every simulation walks the tree with a
UCB-style rule (minimization form), expands one leaf, evaluates it with a
rollout policy and backs the accumulated cost up the path.  Committing a
real decision and observation prunes the tree to the matching grandchild
so past simulations keep paying off at the next visit.
"""

from __future__ import annotations

import math
import time
from collections import deque
from typing import Optional

import numpy as np

from . import _kernels as K
from .dynamics import DeadPatientError, DiseaseModel
from .filters import BeliefFilter
from .params import DELAYS, PlannerParams
from .patient import DECISIONS, Decision, Observation, decision_index

__all__ = ["Planner", "bin_observation", "adaptive_alpha",
           "DecisionNode", "HistoryNode"]


def bin_observation(obs: Observation, precision: float) -> Optional[int]:
    """Deterministic observation discretization: contiguous intervals of
    width ``precision`` anchored at zero.  The death sentinel maps to the
    reserved terminal bin (None)."""
    if obs.terminal:
        return None
    return int(math.floor(obs.reading / precision))


def adaptive_alpha(mode_marginal, rule: str) -> float:
    """Exploitation weight derived from the belief's condition entropy.

    The entropy of the live-condition marginal is scaled by its maximum
    (uniform over the three live conditions); ``entropy`` returns that
    ratio, ``rev-entropy`` its complement and ``rev-entropy-2`` the
    half-complement.
    """
    p = np.asarray(mode_marginal, dtype=float)[:3]
    total = p.sum()
    if total <= 0:
        ratio = 0.0
    else:
        p = p / total
        ent = float(np.sum([q * math.log(q) for q in p if q > 0.0]))
        ratio = ent / math.log(1.0 / 3.0)
    if rule == "entropy":
        return ratio
    if rule == "rev-entropy":
        return 1.0 - ratio
    if rule == "rev-entropy-2":
        return 1.0 - ratio / 2.0
    raise ValueError(f"unknown adaptive alpha rule {rule!r}")


class DecisionNode:
    __slots__ = ("n", "v", "children")

    def __init__(self, n_init: float, v_init: float):
        self.n = n_init
        self.v = v_init
        self.children: dict[Optional[int], HistoryNode] = {}


class HistoryNode:
    __slots__ = ("n", "children", "support", "expanded")

    def __init__(self, support_cap: int):
        self.n = 0
        self.children: list[DecisionNode] = []
        self.support: deque = deque(maxlen=support_cap)
        self.expanded = False

    def node_count(self) -> int:
        total = 1
        for dn in self.children:
            for child in dn.children.values():
                total += child.node_count()
        return total


class _SearchTree:
    """One private tree plus its running cost scale."""

    def __init__(self, model: DiseaseModel, params: PlannerParams):
        self.model = model
        self.params = params
        self.pm = model.packed
        cap = params.support_cap_factor * params.k_root
        self.root = HistoryNode(cap)
        self.support_cap = cap
        self.scale = 0.0       # running mean of |backed-up root cost|
        self.scale_n = 0
        self.cost_ledger: Optional[list] = None  # (id(node), idx, cost) when enabled

    def ensure_root_expanded(self) -> None:
        # the root history always exists in the tree: expanding it costs no
        # simulation, so the very first root simulation already selects
        if not self.root.expanded:
            self.root.children = [
                DecisionNode(self.params.n_init, self.params.v_init)
                for _ in range(9)]
            self.root.expanded = True

    def run(self, root_states, n_sims: int, alpha_prime: float,
            rng: np.random.Generator) -> None:
        self.ensure_root_expanded()
        modes, markers, sincejumps, clocks = root_states
        k = modes.shape[0]
        pol = K.ROLLOUT_MODE if self.params.rollout == "mode" else K.ROLLOUT_UNIFORM
        for _ in range(n_sims):
            i = int(rng.integers(0, k))
            alpha = (1.0 - alpha_prime) * self.scale
            cost = self._simulate(int(modes[i]), float(markers[i]),
                                  float(sincejumps[i]), float(clocks[i]),
                                  self.root, alpha, pol, rng)
            self.scale_n += 1
            self.scale += (abs(cost) - self.scale) / self.scale_n

    def _simulate(self, m, z, u, clock, node: HistoryNode, alpha: float,
                  pol: int, rng) -> float:
        if m == 3 or clock >= self.pm.horizon:
            return 0.0
        if not node.expanded:
            node.children = [DecisionNode(self.params.n_init, self.params.v_init)
                             for _ in range(9)]
            node.expanded = True
            node.n += 1
            return float(K.rollout(m, z, u, clock, pol, self.pm, rng))
        didx = self._select(node, alpha)
        li = didx // 3
        r = float(DELAYS[didx % 3])
        m2, z2, u2, c2, reading, terminal, cost, _ = K.generate(
            m, z, u, clock, li, r, self.pm, rng)
        if terminal:
            btok = None
        else:
            btok = int(math.floor(reading / self.params.precision))
        dn = node.children[didx]
        child = dn.children.get(btok)
        if child is None:
            child = HistoryNode(self.support_cap)
            dn.children[btok] = child
        total = cost + self._simulate(m2, z2, u2, c2, child, alpha, pol, rng)
        node.support.append((m, z, u, clock))
        node.n += 1
        dn.n += 1
        dn.v += (total - dn.v) / dn.n
        if self.cost_ledger is not None:
            self.cost_ledger.append((id(dn), didx, total))
        return total

    def _select(self, node: HistoryNode, alpha: float) -> int:
        best = -1
        best_val = math.inf
        log_n = math.log(node.n) if node.n > 0 else 0.0
        for idx in range(9):
            child = node.children[idx]
            if child.n <= 0:
                return idx  # forced first visit, fixed order
            val = child.v - alpha * math.sqrt(log_n / child.n)
            if val < best_val:
                best_val = val
                best = idx
        return best

    def commit(self, didx: int, btok: Optional[int]) -> None:
        if not self.root.expanded:
            self.root = HistoryNode(self.support_cap)
            return
        dn = self.root.children[didx]
        child = dn.children.get(btok)
        self.root = child if child is not None else HistoryNode(self.support_cap)


class Planner:
    """Per-patient planning state: the pruned search tree(s) across visits.

    With ``root_workers`` > 1 the budget is split across private trees
    whose root statistics are merged (visit-count-weighted value average)
    before the argmin; determinism is per-worker-seed.
    """

    def __init__(self, model: DiseaseModel, params: Optional[PlannerParams] = None):
        self.model = model
        self.params = params or PlannerParams()
        self.trees = [_SearchTree(model, self.params)
                      for _ in range(self.params.root_workers)]

    def plan(self, belief: BeliefFilter,
             rng: np.random.Generator) -> tuple[Decision, dict]:
        """Run the search budget from the current history and return the
        minimizing decision with the full per-decision value/count table."""
        if belief.is_dead:
            raise DeadPatientError("plan called for a dead patient")
        params = self.params
        if isinstance(params.alpha_prime, str):
            a_prime = adaptive_alpha(belief.mode_marginal(), params.alpha_prime)
            a_prime = min(max(a_prime, 1e-6), 1.0)
        else:
            a_prime = float(params.alpha_prime)
        t0 = time.perf_counter()
        w = len(self.trees)
        root_states = belief.sample_arrays(params.k_root, rng)
        share = params.n_search // w
        budgets = [share + (1 if i < params.n_search - share * w else 0)
                   for i in range(w)]
        if w == 1:
            self.trees[0].run(root_states, budgets[0], a_prime, rng)
        else:
            import threading
            streams = rng.spawn(w)
            threads = [threading.Thread(target=t.run,
                                        args=(root_states, b, a_prime, s))
                       for t, b, s in zip(self.trees, budgets, streams)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        values, counts = self._merged_root_table()
        best = min(range(9), key=lambda i: (values[i], i))
        wall_ms = (time.perf_counter() - t0) * 1e3
        diag = {
            "decision": DECISIONS[best].label,
            "values": values,
            "counts": counts,
            "alpha_prime": a_prime,
            "alpha": (1.0 - a_prime) * self.trees[0].scale,
            "n_search": params.n_search,
            "wall_ms": wall_ms,
        }
        return DECISIONS[best], diag

    def _merged_root_table(self) -> tuple[list[float], list[float]]:
        values = []
        counts = []
        for idx in range(9):
            num = 0.0
            den = 0.0
            for tree in self.trees:
                if not tree.root.expanded:
                    continue
                dn = tree.root.children[idx]
                num += dn.v * dn.n
                den += dn.n
            values.append(num / den if den > 0 else self.params.v_init)
            counts.append(den)
        return values, counts

    def commit(self, decision: Decision, obs: Observation) -> None:
        """Prune every tree to the (decision, observation-bin) grandchild;
        retained statistics are untouched."""
        didx = decision_index(decision)
        btok = bin_observation(obs, self.params.precision)
        for tree in self.trees:
            tree.commit(didx, btok)

    @property
    def root(self) -> HistoryNode:
        return self.trees[0].root
