"""Adversarial environments that honor an eventual-safety contract.

Used to exercise the controller's finite-time guarantees as properties: the
adversary pushes the largest loss the contract allows at every step, so any
slack in the bounds would show up as a violation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controller import (
    ControllerState,
    LossDirection,
    RiskTrace,
    SafetyEnvelope,
    lemma_floor,
    running_mean,
    theorem_bound,
    update,
)

# Float slack for bound comparisons; values are O(1) so this is ~1e5 ulp.
BOUND_ATOL = 1e-10


def adversarial_trace(
    envelope: SafetyEnvelope,
    lambda_1: float,
    eta: float,
    epsilon: float,
    horizon: int,
    rng: np.random.Generator,
    loss_range: tuple[float, float] = (0.0, 1.0),
    p_random: float = 0.2,
    direction: LossDirection | str = LossDirection.AGGRESSIVE,
) -> RiskTrace:
    """Run the controller against a contract-honoring adversary.

    At step t the adversary knows lambda_1..lambda_t.  If lambda_t is on the
    safe side, every length-K window that contains t and whose known lambdas
    are all safe must keep its loss sum within ``K * epsilon_safe``; the
    adversary reserves ``loss_lo`` for each unseen step of such windows, which
    keeps the contract satisfiable at every later step.  It plays the largest
    admissible loss, except with probability ``p_random`` where it draws
    uniformly below that cap.
    """
    direction = LossDirection.parse(direction)
    lo, hi = loss_range
    K = envelope.k_horizon
    budget = K * envelope.epsilon_safe
    state = ControllerState(lambda_1, eta, epsilon, direction, lo, hi)
    lambdas: list[float] = []
    losses: list[float] = []
    safe: list[bool] = []
    for t in range(horizon):
        lam = state.lam
        lambdas.append(lam)
        safe.append(direction.is_safe(lam, envelope.lambda_safe))
        cap = hi
        if safe[-1]:
            for end in range(t, t + K):
                start = end - K + 1
                if start < 0:
                    continue
                if all(safe[start : t + 1]):
                    cap = min(cap, budget - sum(losses[start:t]) - (end - t) * lo)
        cap = min(max(cap, lo), hi)
        if rng.random() < p_random:
            loss = lo + (cap - lo) * rng.random()
        else:
            loss = cap
        losses.append(loss)
        state = update(state, loss)
    return RiskTrace(lambdas, losses, running_mean(losses), lo, hi, lambda_next=state.lam)


def contract_holds(trace: RiskTrace, envelope: SafetyEnvelope, direction=LossDirection.AGGRESSIVE) -> bool:
    """Check the eventual-safety premise on every length-K window of ``trace``."""
    direction = LossDirection.parse(direction)
    K = envelope.k_horizon
    safe = [direction.is_safe(lam, envelope.lambda_safe) for lam in trace.lambdas]
    for s in range(len(trace) - K + 1):
        if all(safe[s : s + K]) and trace.losses[s : s + K].mean() > envelope.epsilon_safe + BOUND_ATOL:
            return False
    return True


@dataclass
class BoundCheck:
    risk_violations: int
    floor_violations: int
    worst_risk_margin: float  # min over t of bound - risk
    worst_floor_margin: float  # min over t of lambda_t - floor (mirrored)


def check_bounds(
    trace: RiskTrace,
    envelope: SafetyEnvelope,
    lambda_1: float,
    eta: float,
    epsilon: float,
    direction=LossDirection.AGGRESSIVE,
) -> BoundCheck:
    """Count violations of the risk bound (t >= K) and of the lambda floor."""
    direction = LossDirection.parse(direction)
    span = trace.loss_hi - trace.loss_lo
    K = envelope.k_horizon
    T = len(trace)
    ts = np.arange(1, T + 1)
    b_K = theorem_bound(envelope, lambda_1, eta, epsilon, K, (trace.loss_lo, trace.loss_hi), direction)
    # bound(t) = epsilon + c / t with c fixed by the value at t = K
    c = (b_K - epsilon) * K
    bounds = epsilon + c / ts
    margin = (bounds - trace.risks)[K - 1 :]
    floor = lemma_floor(envelope, eta, span, direction)
    lams = np.append(trace.lambdas, trace.lambda_next if trace.lambda_next is not None else [])
    floor_margin = direction.sign * (lams - floor)
    return BoundCheck(
        risk_violations=int(np.sum(margin < -BOUND_ATOL)),
        floor_violations=int(np.sum(floor_margin < -BOUND_ATOL)),
        worst_risk_margin=float(margin.min()) if len(margin) else float("inf"),
        worst_floor_margin=float(floor_margin.min()),
    )


def random_contract(rng: np.random.Generator, loss_range=(0.0, 1.0)):
    """Draw (envelope, lambda_1, eta, epsilon) satisfying the theorem's premises."""
    lo, hi = loss_range
    span = hi - lo
    epsilon = lo + span * rng.uniform(0.01, 0.99)
    envelope = SafetyEnvelope(
        lambda_safe=float(rng.uniform(-5, 5)),
        epsilon_safe=float(lo + (epsilon - lo) * rng.uniform(0, 1)),
        k_horizon=int(rng.integers(1, 6)),
    )
    eta = float(10 ** rng.uniform(-2, 1))
    lambda_1 = envelope.lambda_safe - eta * span + float(rng.exponential(2.0)) * eta * span
    return envelope, lambda_1, eta, epsilon


SEQUENCE_COLUMNS = ("sequence", "k_horizon", "risk_violations", "floor_violations", "contract_ok", "worst_risk_margin", "worst_floor_margin")


def theory_rows(n_sequences: int, horizon: int, seed: int) -> list[tuple]:
    """One row per adversarial sequence, columns ``SEQUENCE_COLUMNS``."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    rows = []
    for i in range(n_sequences):
        env, lam1, eta, eps = random_contract(rng)
        trace = adversarial_trace(env, lam1, eta, eps, horizon, rng)
        chk = check_bounds(trace, env, lam1, eta, eps)
        rows.append(
            (i, env.k_horizon, chk.risk_violations, chk.floor_violations, int(contract_holds(trace, env)), chk.worst_risk_margin, chk.worst_floor_margin)
        )
    return rows


def summarize_rows(rows) -> dict:
    """Tally violations over ``theory_rows`` output."""
    risk_v = sum(int(r[2]) for r in rows)
    floor_v = sum(int(r[3]) for r in rows)
    return {
        "sequences": len(rows),
        "risk_violations": risk_v,
        "floor_violations": floor_v,
        "contract_violations": sum(1 - int(r[4]) for r in rows),
        "violations": risk_v + floor_v,
        "worst_risk_margin": min((float(r[5]) for r in rows), default=float("inf")),
        "worst_floor_margin": min((float(r[6]) for r in rows), default=float("inf")),
    }


def theory_check(n_sequences: int, horizon: int, seed: int) -> dict:
    """Run ``n_sequences`` adversarial traces and tally bound violations."""
    return {**summarize_rows(theory_rows(n_sequences, horizon, seed)), "horizon": horizon}
