from dataclasses import dataclass


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs shared by the solvers, verifier and oracle."""

    scan_points: int = 100001          # argmax scan of delta*pi + w
    retire_scan_points: int = 20001    # shooting scan over the knowledge gift
    eps_step: float = 1e-10            # stop the recursion below this step
    eps_root: float = 1e-12
    eps_val: float = 1e-11             # plateau band for smallest-maximizer ties
    max_periods: int = 10000
    cap: int = 5_000_000               # oracle enumeration cap
    tol: float = 1e-8                  # verifier compliance tolerance
