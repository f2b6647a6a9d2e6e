from enum import Enum


class Verdict(str, Enum):
    HOLDS = "holds"
    EQUALITY = "equality"
    INCONCLUSIVE = "inconclusive"
    VIOLATED = "violated(numerical)"
    INFEASIBLE = "infeasible"


def judge(lhs: float, rhs: float, tol: float, *, relative: bool = False) -> Verdict:
    """Classify lhs <= rhs under a discretization tolerance.

    Excess within tol counts as equality. An excess up to 10x the tolerance is
    inconclusive, beyond that the inequality is reported numerically violated.
    """
    if relative:
        scale = abs(rhs) if rhs != 0 else 1.0
        excess = (lhs - rhs) / scale
    else:
        excess = lhs - rhs
    if abs(excess) <= tol:
        return Verdict.EQUALITY
    if excess < 0:
        return Verdict.HOLDS
    if excess <= 10 * tol:
        return Verdict.INCONCLUSIVE
    return Verdict.VIOLATED
