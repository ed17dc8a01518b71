"""Closed-form maps between mastery-chain parameters and their equilibrium
item-response representation.

At stationarity the probability of a correct response under the two-state
chain equals a discrimination-1 4PL curve evaluated at
log(p_learn) - log(p_forget), with asymptotes p_guess and 1 - p_slip. The
maps here are exact reparameterizations, not estimators: for a single skill
the ability log(p_learn) and difficulty log(p_forget) enter only through
their difference and are not separately identifiable from that skill's
equilibrium data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .chain import marginal_at, stationary_closed_form
from .errors import NonErgodic, OutOfDomain
from .params import BktParams


@dataclass(frozen=True)
class SkillEquilibrium:
    """Skill-level equilibrium curve parameters.

    theta = log p_learn, b = log p_forget (both <= 0), c = p_guess,
    d = 1 - p_slip; p_correct is the stationary correct-response probability.
    """

    theta: float
    b: float
    c: float
    d: float
    p_correct: float


@dataclass(frozen=True)
class LearnerItemEquilibrium:
    """Equilibrium curve for one learner-item chain.

    theta = log of the learner's p_learn, b = log of the item's p_forget,
    c/d the item's guess and 1 - slip.
    """

    theta: float
    b: float
    c: float
    d: float
    p_correct: float


def _require_ergodic(p_learn: float, p_forget: float) -> None:
    if p_learn <= 0.0 or p_forget <= 0.0:
        raise NonErgodic(
            "equilibrium map needs p_learn > 0 and p_forget > 0 "
            f"(got p_learn={p_learn}, p_forget={p_forget}); with p_forget = 0 "
            "use classic_limit instead"
        )


def bkt_to_irt(params: BktParams) -> SkillEquilibrium:
    """Equilibrium response law of a skill's mastery chain.

    p_correct mixes the stationary mastery mass through the emissions:
    p_guess + ((1 - p_slip) - p_guess) * lambda1.
    """
    _require_ergodic(params.p_learn, params.p_forget)
    lam1 = stationary_closed_form(params).lambda1
    d = 1.0 - params.p_slip
    p_correct = params.p_guess + (d - params.p_guess) * lam1
    return SkillEquilibrium(
        theta=math.log(params.p_learn),
        b=math.log(params.p_forget),
        c=params.p_guess,
        d=d,
        p_correct=p_correct,
    )


def learner_item_equilibrium(
    p_learn_p: float,
    p_forget_i: float,
    p_slip_i: float,
    p_guess_i: float,
) -> LearnerItemEquilibrium:
    """Equilibrium law of one learner-item chain (learner-side learning rate,
    item-side forgetting, guess and slip)."""
    params = BktParams(
        p_init=0.5,
        p_learn=p_learn_p,
        p_forget=p_forget_i,
        p_slip=p_slip_i,
        p_guess=p_guess_i,
    )
    skill = bkt_to_irt(params)
    return LearnerItemEquilibrium(
        theta=skill.theta, b=skill.b, c=skill.c, d=skill.d, p_correct=skill.p_correct
    )


@dataclass(frozen=True)
class RecoveredParams:
    """Mastery-chain parameters recovered from an equilibrium curve.

    p_init carries no information at equilibrium, so it is returned as the
    0.5 placeholder with equilibrium_only set.
    """

    params: BktParams
    equilibrium_only: bool = True


def irt_to_bkt(theta: float, b: float, c: float, d: float) -> RecoveredParams:
    """Invert the equilibrium map: p_learn = e^theta, p_forget = e^b,
    p_guess = c, p_slip = 1 - d.

    theta and b must be <= 0 (logs of probabilities); positive values would
    imply transition probabilities above 1.
    """
    if theta > 0.0 or b > 0.0:
        raise OutOfDomain(
            f"theta and b must be <= 0 (logs of probabilities), got "
            f"theta={theta}, b={b}"
        )
    if not 0.0 <= c < d <= 1.0:
        raise OutOfDomain(f"asymptotes must satisfy 0 <= c < d <= 1, got c={c}, d={d}")
    params = BktParams(
        p_init=0.5,
        p_learn=math.exp(theta),
        p_forget=math.exp(b),
        p_slip=1.0 - d,
        p_guess=c,
    )
    return RecoveredParams(params=params, equilibrium_only=True)


def classic_limit(params: BktParams) -> float:
    """Long-run correct probability when mastery is absorbing (p_forget = 0).

    The chain converges to the mastered state, so responses converge to
    Bernoulli(1 - p_slip).
    """
    if params.p_forget != 0.0:
        raise ValueError(
            f"classic_limit requires p_forget == 0, got {params.p_forget}"
        )
    if params.p_learn <= 0.0:
        raise ValueError("classic_limit requires p_learn > 0")
    return 1.0 - params.p_slip


def equilibrium_gap(params: BktParams, t: int) -> float:
    """|P(correct at attempt t) - equilibrium correct probability|.

    P(correct at t) mixes the exact t-step mastery marginal through the
    emissions. Decays geometrically at rate |1 - p_learn - p_forget|.
    """
    _require_ergodic(params.p_learn, params.p_forget)
    if params.p_learn + params.p_forget == 2.0:
        raise NonErgodic(
            "p_learn = p_forget = 1 is a period-2 chain; marginals never converge"
        )
    spread = (1.0 - params.p_slip) - params.p_guess
    p_t = params.p_guess + spread * marginal_at(params, t)
    p_eq = params.p_guess + spread * stationary_closed_form(params).lambda1
    return abs(p_t - p_eq)
