"""Truncated Laurent series over F_p[x, x^-1][[y]] and the degree-growth obstruction.

The series s = Σ_n x^(-2^n) y^n has no multiple q·s with q_0 ≠ 0 and polynomial
coefficients whose degrees stay bounded. Truncating at y^L turns the search for
such q into a homogeneous linear system in the coefficients of q_0 .. q_(L-1).
"""
import logging
import time
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from finalg import get_field, nullspace, rref

logger = logging.getLogger("serieslab")


@dataclass(frozen=True)
class TruncatedLaurentSeries:
    """coefficients[n] maps x-exponents to nonzero residues of the y^n coefficient."""

    characteristic: int
    coefficients: Tuple[Dict[int, int], ...]

    @property
    def levels(self) -> int:
        return len(self.coefficients)

    def is_polynomial(self) -> bool:
        return all(e >= 0 for c in self.coefficients for e in c)

    def valuation(self, n: int) -> Optional[int]:
        c = self.coefficients[n]
        return min(c) if c else None

    def __str__(self) -> str:
        terms = []
        for n, c in enumerate(self.coefficients):
            for e in sorted(c):
                coeff = "" if c[e] == 1 else f"{c[e]}·"
                y = "" if n == 0 else ("y" if n == 1 else f"y^{n}")
                terms.append(f"{coeff}x^{e}{y}")
        return " + ".join(terms) or "0"


def _clean(coeffs: Dict[int, int], p: int) -> Dict[int, int]:
    return {e: v % p for e, v in coeffs.items() if v % p}


def obstruction_series(levels: int, characteristic: int = 2) -> TruncatedLaurentSeries:
    """s mod y^L: the y^n coefficient is x^(-2^n)."""
    if levels < 1:
        raise ValueError("truncation level must be at least 1")
    get_field(characteristic)
    return TruncatedLaurentSeries(characteristic, tuple({-(2 ** n): 1} for n in range(levels)))


def multiply(series: TruncatedLaurentSeries, q: Sequence[np.ndarray]) -> TruncatedLaurentSeries:
    """q·s mod y^L for q = Σ_j q_j(x) y^j, q_j given by coefficient vectors in x^0 .. x^D."""
    p = series.characteristic
    out: List[Dict[int, int]] = []
    for n in range(series.levels):
        acc: Dict[int, int] = {}
        for m in range(n + 1):
            if n - m >= len(q):
                continue
            for e_s, c_s in series.coefficients[m].items():
                for i in np.flatnonzero(q[n - m]):
                    e = e_s + int(i)
                    acc[e] = acc.get(e, 0) + c_s * int(q[n - m][i])
        out.append(_clean(acc, p))
    return TruncatedLaurentSeries(p, tuple(out))


def obstruction_system(levels: int, degree: int, characteristic: int = 2) -> np.ndarray:
    """Rows kill every negative x-power of Σ_m x^(-2^m) q_(n-m) for n < L.

    Unknown q_(j, i) (coefficient of x^i in q_j) sits at column j·(D+1) + i.
    """
    if levels < 1 or degree < 0:
        raise ValueError("need L >= 1 and D >= 0")
    f = get_field(characteristic)
    width = degree + 1
    rows = []
    for n in range(levels):
        for e in range(-(2 ** n), 0):
            row = f.zeros(levels * width)
            for m in range(n + 1):
                i = e + 2 ** m
                if 0 <= i <= degree:
                    row[(n - m) * width + i] = f.one
            if np.any(row != 0):
                rows.append(row)
    return np.stack(rows) if rows else f.zeros((0, levels * width))


@dataclass(frozen=True)
class SeriesSolution:
    valuation: int
    q: Tuple[np.ndarray, ...]
    p: TruncatedLaurentSeries
    system_shape: Tuple[int, int]


def min_valuation_of_solution(levels: int, degree: int, characteristic: int = 2) -> Optional[SeriesSolution]:
    """Least x-valuation of q_0 over solutions with q_0 ≠ 0, or None when every solution has q_0 = 0."""
    f = get_field(characteristic)
    system = obstruction_system(levels, degree, characteristic)
    width = degree + 1
    kernel = nullspace(f, system)
    if kernel.shape[0] == 0:
        return None
    # columns of q_0 come first, so the leading pivot of the reduced basis is the least valuation
    reduced, pivots = rref(f, kernel)
    if not pivots or pivots[0] >= width:
        logger.debug("L=%d D=%d: every solution has q_0 = 0", levels, degree)
        return None
    row = reduced[0]
    q = tuple(row[j * width:(j + 1) * width].copy() for j in range(levels))
    product = multiply(obstruction_series(levels, characteristic), q)
    if not product.is_polynomial():
        raise ArithmeticError(f"solution for L={levels}, D={degree} leaves negative x-powers")
    return SeriesSolution(pivots[0], q, product, system.shape)


def valuation_table(levels: Iterable[int], degree: int, characteristic: int = 2) -> pd.DataFrame:
    """One row per L: valuation (missing when no admissible solution), system dims and elapsed seconds."""
    rows = []
    for L in levels:
        start = time.perf_counter()
        solution = min_valuation_of_solution(L, degree, characteristic)
        elapsed = time.perf_counter() - start
        system_rows, system_cols = obstruction_system(L, degree, characteristic).shape
        rows.append({
            "levels": L,
            "valuation": solution.valuation if solution else pd.NA,
            "lower_bound": 2 ** (L - 2) if L >= 2 else 1,
            "system_rows": system_rows,
            "system_cols": system_cols,
            "elapsed": round(elapsed, 6),
        })
        logger.info("L=%d D=%d -> v=%s (%.3fs)", L, degree, solution.valuation if solution else "none", elapsed)
    frame = pd.DataFrame(rows, columns=["levels", "valuation", "lower_bound", "system_rows", "system_cols", "elapsed"])
    frame["valuation"] = frame["valuation"].astype("Int64")
    return frame
