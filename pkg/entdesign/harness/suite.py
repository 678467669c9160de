import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from entdesign.core.criteria import (
    CriterionReport,
    ccnr,
    linear_design_value,
    lur,
    nonlinear_design_value,
    ppt,
)
from entdesign.core.designs import (
    DesignCertificate,
    NormalizedDesign,
    ProjectiveDesign,
    build_sic,
    normalize_design,
    optimize_design,
    superimpose,
    verify_design,
)
from entdesign.core.matcore import BipartiteDims
from entdesign.core.states import DensityMatrix, RngStream, random_unitary

logger = logging.getLogger("entdesign.harness")

CriterionFn = Callable[[DensityMatrix], CriterionReport]

SIC_DIMS = (2, 3)


def build_design(d: int, n: int, seed: int) -> ProjectiveDesign:
    """Design used for E2D/L2D.

    N = d^2 gives the analytic SIC, N = 2 d^2 superimposes the SIC with a
    seeded Haar rotation of itself, anything else is optimized from seed.
    """
    if d in SIC_DIMS and n == d * d:
        return build_sic(d)
    if d in SIC_DIMS and n == 2 * d * d:
        sic = build_sic(d)
        rotation = random_unitary(d, RngStream(master_seed=seed, stream_index=0))
        return superimpose(sic, sic, rotation)
    return optimize_design(d, n, seed)


class CriterionSuite(BaseModel):
    """Normalized designs per local dimension plus the criterion dispatch."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    sic: Dict[int, NormalizedDesign]
    designs: Dict[int, List[NormalizedDesign]]
    certificates: List[DesignCertificate]
    # unnormalized vectors of every design above, SICs first
    sources: List[ProjectiveDesign]

    @classmethod
    def build(
        cls,
        design_n: Dict[int, List[int]],
        design_seed: int,
        extra_designs: Sequence[ProjectiveDesign] = (),
    ) -> "CriterionSuite":
        sic: Dict[int, NormalizedDesign] = {}
        designs: Dict[int, List[NormalizedDesign]] = {}
        certificates: List[DesignCertificate] = []
        sources: List[ProjectiveDesign] = []
        for d in SIC_DIMS:
            p = build_sic(d)
            sources.append(p)
            certificates.append(verify_design(p))
            sic[d] = normalize_design(p)
        built = [
            build_design(d, n, design_seed)
            for d, ns in sorted(design_n.items())
            for n in ns
        ]
        for p in list(extra_designs) + built:
            if p.kind != "sic":
                certificates.append(verify_design(p))
            designs.setdefault(p.dim, []).append(normalize_design(p))
            sources.append(p)
        for d, nds in sorted(designs.items()):
            logger.info("Designs for d=%d: %s", d, ", ".join(nd.label for nd in nds))
        return cls(
            sic=sic, designs=designs, certificates=certificates, sources=sources
        )

    def design_pairs(
        self, dims: BipartiteDims
    ) -> List[Tuple[NormalizedDesign, NormalizedDesign]]:
        side_A = self.designs.get(dims.d_A, [])
        side_B = self.designs.get(dims.d_B, [])
        if not side_A or not side_B:
            return []
        if dims.balanced:
            return [(nd, nd) for nd in side_A]
        count = max(len(side_A), len(side_B))
        return [
            (side_A[min(i, len(side_A) - 1)], side_B[min(i, len(side_B) - 1)])
            for i in range(count)
        ]

    def evaluators(self, dims: BipartiteDims) -> Dict[str, CriterionFn]:
        """Criteria that apply to dims, keyed by their report label.

        E2D/L2D labels carry the design size, e.g. "E2D(N=7)"; the bare
        "E2D" and "L2D" address the first configured design.
        """
        table: Dict[str, CriterionFn] = {"PPT": ppt, "CCNR": ccnr}
        sic_A, sic_B = self.sic.get(dims.d_A), self.sic.get(dims.d_B)
        if sic_A is not None and sic_B is not None:
            table["ESIC"] = lambda rho: linear_design_value(rho, sic_A, sic_B)
        pairs = self.design_pairs(dims)
        for i, (nd_A, nd_B) in enumerate(pairs):
            label = _pair_label(nd_A, nd_B, "E2D")
            table[label] = _bind_linear(nd_A, nd_B, label)
            if i == 0:
                table["E2D"] = _bind_linear(nd_A, nd_B, "E2D")
        if dims.balanced:
            table["LUR"] = lur
            if sic_A is not None:
                table["LSIC"] = lambda rho: nonlinear_design_value(rho, sic_A)
            for i, (nd, _) in enumerate(pairs):
                label = _pair_label(nd, nd, "L2D")
                table[label] = _bind_nonlinear(nd, label)
                if i == 0:
                    table["L2D"] = _bind_nonlinear(nd, "L2D")
        return table

    def criterion_names(
        self, dims: BipartiteDims, include: Optional[Sequence[str]] = None
    ) -> List[str]:
        """Labels applicable to dims, without the bare E2D/L2D aliases."""
        names = [n for n in self.evaluators(dims) if n not in ("E2D", "L2D")]
        if include is None:
            return names
        wanted = set(include)
        return [
            n for n in names if n in wanted or n.split("(")[0] in wanted
        ]

    def evaluate(self, name: str, rho: DensityMatrix) -> CriterionReport:
        table = self.evaluators(rho.dims)
        if name not in table:
            raise ValueError(
                f"criterion {name!r} does not apply to {rho.dims} states; "
                f"available: {sorted(table)}"
            )
        return table[name](rho)


def _pair_label(nd_A: NormalizedDesign, nd_B: NormalizedDesign, family: str) -> str:
    if nd_A.n == nd_B.n:
        return f"{family}(N={nd_A.n})"
    return f"{family}(N={nd_A.n},{nd_B.n})"


def _bind_linear(nd_A: NormalizedDesign, nd_B: NormalizedDesign, label: str):
    return lambda rho: linear_design_value(rho, nd_A, nd_B, criterion=label)


def _bind_nonlinear(nd: NormalizedDesign, label: str):
    return lambda rho: nonlinear_design_value(rho, nd, criterion=label)
