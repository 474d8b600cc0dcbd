"""Exception types shared by the solvers and the CLI."""


class DomainError(ValueError):
    """A coefficient function was evaluated outside its domain."""


class NumericalFailure(RuntimeError):
    """A solver could not produce a trustworthy result."""


class CFLError(NumericalFailure):
    def __init__(self, dt, g_max, dl, min_coefficient):
        self.dt = dt
        self.g_max = g_max
        self.dl = dl
        self.min_coefficient = min_coefficient
        super().__init__(
            f"explicit step refused: dt={dt:.6g} yr with max growth {g_max:.6g} cm/yr "
            f"and dl={dl:.6g} cm gives update coefficient {min_coefficient:.3g} < 0"
        )


class BracketError(NumericalFailure):
    def __init__(self, lo, hi, f_lo, f_hi, what="residual"):
        self.lo, self.hi = lo, hi
        self.f_lo, self.f_hi = f_lo, f_hi
        super().__init__(
            f"no sign change of the {what} on [{lo:.6g}, {hi:.6g}]: "
            f"f(lo)={f_lo:.6g}, f(hi)={f_hi:.6g}"
        )
