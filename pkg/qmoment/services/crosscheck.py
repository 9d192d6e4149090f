"""Consistency check between heterodyne and homodyne moment estimates."""

import logging

import numpy as np

from qmoment.core.exceptions import InsufficientDegree, OrderingMismatch
from qmoment.core.lattice import lattice_indices
from qmoment.core.models import MomentEstimate, Ordering
from qmoment.core.schemas import CrosscheckEntry, CrosscheckReport

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 4.0
MIN_STDERR = 1e-300


def crosscheck(
    heterodyne: MomentEstimate,
    homodyne: MomentEstimate,
    max_degree: int,
    threshold: float = DEFAULT_THRESHOLD,
) -> CrosscheckReport:
    """
    Compare two antinormal estimates entry by entry.

    Entries (i, j) with i >= j and 1 <= i + j <= R are compared; their
    conjugate partners carry the same information.

    Args:
        heterodyne: Estimate from envelope samples
        homodyne: Estimate inverted from quadrature samples
        max_degree: Largest total degree compared
        threshold: Largest accepted |delta| / combined stderr

    Returns:
        CrosscheckReport with per-entry z-scores

    Raises:
        OrderingMismatch: If either estimate is not antinormal
        InsufficientDegree: If either estimate stops below degree R
    """
    for estimate in (heterodyne, homodyne):
        if estimate.table.ordering is not Ordering.ANTINORMAL:
            raise OrderingMismatch(
                "cross-check compares antinormal estimates",
                {"ordering": estimate.table.ordering.value},
            )
        if estimate.table.max_degree < max_degree:
            raise InsufficientDegree(
                "estimate stops below the compared degree",
                {"max_degree": estimate.table.max_degree, "needed": max_degree},
            )

    entries = []
    for i, j in lattice_indices(max_degree):
        if i + j == 0 or i < j:
            continue
        het = heterodyne.table.entry(i, j)
        hom = homodyne.table.entry(i, j)
        combined = float(np.hypot(heterodyne.stderr_entry(i, j), homodyne.stderr_entry(i, j)))
        delta = abs(het - hom)
        entries.append(
            CrosscheckEntry(
                i=i,
                j=j,
                heterodyne_re=het.real,
                heterodyne_im=het.imag,
                homodyne_re=hom.real,
                homodyne_im=hom.imag,
                delta=delta,
                combined_stderr=combined,
                z=delta / max(combined, MIN_STDERR),
            )
        )

    consistent = all(entry.z <= threshold for entry in entries)
    if not consistent:
        worst = max(entries, key=lambda entry: entry.z)
        logger.warning("Cross-check failed at (%d, %d) with z=%.2f", worst.i, worst.j, worst.z)
    return CrosscheckReport(
        max_degree=max_degree, threshold=threshold, entries=entries, consistent=consistent
    )
