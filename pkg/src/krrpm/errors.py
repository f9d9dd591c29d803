"""Exception types raised across the package."""


class InputError(ValueError):
    """Malformed or inconsistent user input (shapes, ranges, names)."""


class NumericError(ArithmeticError):
    """A quantity that is impossible in exact arithmetic showed up.

    Usually means a corrupted or non-PSD precomputed kernel.
    """


class NonMonotoneError(NumericError):
    """Ordinary/deleted conformity difference is not increasing in ``y``.

    Attributes
    ----------
    index : int
        Training index whose slope ``B_i`` is not positive.
    slope : float
        The offending ``B_i``.
    """

    def __init__(self, index, slope):
        self.index = int(index)
        self.slope = float(slope)
        super().__init__(
            f"non-monotone conformity difference at training index {self.index} "
            f"(B_i = {self.slope:.3e}); this variant is not a predictive system here"
        )
