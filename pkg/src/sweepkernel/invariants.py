"""Invariant suites run by the ``check`` command and the acceptance tests."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .brep import SolidBrep
from .mesh import winding_agreement
from .motion import Trajectory
from .oracle import SolidDistance, pmc_many
from .swept import SweptBrep, compute_adjacencies


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: str
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.value:.6g} ({self.threshold}) {self.detail}".rstrip()


def check_closed_shell(swept: SweptBrep) -> CheckResult:
    bad = [e.id for e in swept.edges.values() if len(e.coedges) != 2
           or swept.coedges[e.coedges[0]].sense != -swept.coedges[e.coedges[1]].sense]
    return CheckResult("closed shell", not bad, len(bad), "edges without opposite partner == 0")


def check_euler(swept: SweptBrep) -> CheckResult:
    chi = swept.euler_characteristic()
    c = swept.counts()
    return CheckResult("euler characteristic", chi == 2, chi, "V - E + F - (L - F) == 2",
                       f"V={c['V']} E={c['E']} F={c['F']} L={c['L']}")


def check_adjacency(swept: SweptBrep, solid: SolidBrep) -> CheckResult:
    v = compute_adjacencies(swept, solid)["violations"]
    return CheckResult("generator adjacency", not v, len(v), "violations == 0", str(v[:3]) if v else "")


def check_tags(swept: SweptBrep, solid: SolidBrep) -> CheckResult:
    known = set(solid.vertices) | set(solid.edges) | set(solid.faces)
    ents = list(swept.vertices.values()) + list(swept.edges.values()) + list(swept.faces.values())
    bad = [e.id for e in ents if e.tag is None or e.tag.generator not in known
           or solid.entity_dim(e.tag.generator) != e.tag.generator_dim]
    return CheckResult("tag totality", not bad, len(bad), "untagged entities == 0")


def check_winding(swept: SweptBrep, minimum: float = 0.999) -> CheckResult:
    w = winding_agreement(swept)
    return CheckResult("triangle winding", w >= minimum, w, f">= {minimum}")


def check_oracle_boundary(swept: SweptBrep, solid: SolidBrep, traj: Trajectory, n: int = 1000, nt: int = 256,
                          margin: float = 1e-4, fraction: float = 0.99, deep: float = -1e-3,
                          rng=None, dist=None) -> CheckResult:
    """Exact face samples classify as boundary; none is deep inside."""
    rng = rng or np.random.default_rng(1)
    P, _, _ = swept.sample(n, rng)
    dist = dist or SolidDistance(solid)
    res = pmc_many(P, solid, traj, nt=nt, dist=dist)
    m = np.array([r.margin for r in res])
    frac = float(np.mean(np.abs(m) <= margin))
    n_deep = int(np.sum(m < deep))
    ok = frac >= fraction and n_deep == 0
    return CheckResult("oracle boundary consistency", ok, frac, f">= {fraction} with |margin| <= {margin}",
                       f"deep interior: {n_deep}, max |margin| {np.max(np.abs(m)):.2e}")


def check_orientation(swept: SweptBrep, solid: SolidBrep, traj: Trajectory, n: int = 100, eps: float = 1e-4,
                      nt: int = 256, rng=None, dist=None) -> CheckResult:
    """y + eps n is outside the swept volume and y - eps n is not."""
    rng = rng or np.random.default_rng(2)
    P, N, _ = swept.sample(n, rng)
    dist = dist or SolidDistance(solid)
    out = pmc_many(P + eps * N, solid, traj, nt=nt, dist=dist)
    inn = pmc_many(P - eps * N, solid, traj, nt=nt, dist=dist)
    good = sum(a.verdict == "exterior" and b.verdict != "exterior" for a, b in zip(out, inn))
    return CheckResult("outward orientation", good == len(P), good / len(P), "fraction == 1",
                       f"eps={eps}")


def check_cap_contact(swept: SweptBrep, tol: float = 1e-6) -> CheckResult:
    """Cap boundaries lie on the partner envelope face (exact maps)."""
    worst = 0.0
    for e in swept.edges.values():
        a, b = (swept.coedges[c] for c in e.coedges)
        fa, fb = swept.faces[a.face], swept.faces[b.face]
        if fa.provenance == "cap" and fb.provenance != "cap":
            cap, other = a, b
        elif fb.provenance == "cap" and fa.provenance != "cap":
            cap, other = b, a
        else:
            continue
        if swept.faces[other.face].provenance == "planar_sweep":
            continue
        Y = swept.patch(other.face).project(cap.points)
        worst = max(worst, float(np.max(np.linalg.norm(Y - cap.points, axis=1))))
    return CheckResult("cap/contact agreement", worst <= tol, worst, f"<= {tol}")


def run_suite(swept: SweptBrep, solid: SolidBrep, traj: Trajectory, n_oracle: int = 1000) -> list:
    dist = SolidDistance(solid)
    return [
        check_closed_shell(swept),
        check_euler(swept),
        check_adjacency(swept, solid),
        check_tags(swept, solid),
        check_winding(swept),
        check_cap_contact(swept),
        check_orientation(swept, solid, traj, dist=dist),
        check_oracle_boundary(swept, solid, traj, n=n_oracle, dist=dist),
    ]
