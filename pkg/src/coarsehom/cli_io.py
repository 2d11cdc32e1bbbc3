"""Space documents, map files, the command-line surface, and reports.

Documents are JSON text; rationals travel as "p/q" strings (or integers, or
decimal literals, all converted exactly) so no float ever reaches a
comparison.  Reports render as sorted-key JSON or as flat deterministic text;
two runs over the same inputs produce identical bytes.
"""

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .core_spaces import (
    BornCoarseSpace,
    CoarseError,
    coarse_components,
    big_family_generated,
    from_metric,
    make_big_family,
    make_explicit_space,
    windowed_builtin,
)
from .morphisms import (
    SpaceMap,
    are_close,
    certify_flasque,
    check_equivalence,
    check_morphism,
    FlasqueRefusal,
)
from .homology_engine import (
    DEFAULT_BASIS_CAP,
    DEFAULT_DEGREE_CAP,
    FGAbGroup,
    homology_at_scale,
    homology_colimit,
    mv_check,
    smith_normal_form,
)
from .coarsification import (
    anti_cech,
    asdim_upper_bound,
    coarsening_space,
    coarsify_homology,
    cover_from_net,
    hybrid_entourage,
    nerve,
    uniform_decomposition_check,
)


class ParseError(Exception):
    """Malformed document, map file, or flag value; names the failing field."""

    def __init__(self, message, field_name=None):
        self.field_name = field_name
        where = f" (field {field_name})" if field_name else ""
        super().__init__(f"{message}{where}")


class UnknownCommand(Exception):
    pass


COMMANDS = (
    "components", "homology", "qhomology", "nerve", "anti-cech", "telescope",
    "asdim", "check-morphism", "close", "equivalence", "flasque", "mv-check",
    "hybrid", "udecomp", "snf",
)


# ------------------------------------------------------------ rationals


def _as_rational(value, field_name) -> Fraction:
    if isinstance(value, bool):
        raise ParseError("booleans are not rationals", field_name)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # shortest decimal repr, then exact decimal-string conversion
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as e:
            raise ParseError(f"bad rational {value!r}: {e}", field_name)
    raise ParseError(f"bad rational {value!r}", field_name)


def _rational_token(fr: Fraction) -> str:
    return str(fr.numerator) if fr.denominator == 1 else f"{fr.numerator}/{fr.denominator}"


# ------------------------------------------------------- space documents


def parse_space(document) -> BornCoarseSpace:
    """Build a space from a JSON document (text or already-parsed object)."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as e:
            raise ParseError(f"not valid JSON: {e}")
    else:
        doc = document
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object")
    kind = doc.get("kind")
    if kind == "explicit":
        return _parse_explicit(doc)
    if kind == "metric":
        return _parse_metric(doc)
    if kind == "builtin":
        return _parse_builtin(doc)
    raise ParseError(f"kind must be explicit, metric or builtin, got {kind!r}", "kind")


def _string_points(doc):
    pts = doc.get("points")
    if not isinstance(pts, list) or not pts:
        raise ParseError("points must be a nonempty list", "points")
    for p in pts:
        if not isinstance(p, str):
            raise ParseError(f"point {p!r} is not a string", "points")
    if len(set(pts)) != len(pts):
        raise ParseError("points contain a duplicate", "points")
    return pts


def _parse_explicit(doc) -> BornCoarseSpace:
    pts = _string_points(doc)
    ents = doc.get("entourages")
    if not isinstance(ents, list):
        raise ParseError("entourages must be a list of pair lists", "entourages")
    gens = []
    for gi, pairs in enumerate(ents):
        if not isinstance(pairs, list):
            raise ParseError(f"entourage {gi} is not a pair list", "entourages")
        out = []
        for pair in pairs:
            if not (isinstance(pair, list) and len(pair) == 2):
                raise ParseError(f"entourage {gi} holds a non-pair {pair!r}", "entourages")
            out.append((pair[0], pair[1]))
        gens.append(out)
    born = doc.get("bornology")
    if not isinstance(born, list):
        raise ParseError("bornology must be a list of subsets", "bornology")
    return make_explicit_space(pts, gens, [list(b) for b in born])


def _parse_metric(doc) -> BornCoarseSpace:
    pts = _string_points(doc)
    rows = doc.get("distances")
    if not isinstance(rows, list) or len(rows) != len(pts):
        raise ParseError("distances must have one lower-triangular row per point", "distances")
    n = len(pts)
    full = [[Fraction(0)] * n for _ in range(n)]
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != i:
            raise ParseError(f"row {i} must have exactly {i} entries", "distances")
        for j, v in enumerate(row):
            d = _as_rational(v, "distances")
            full[i][j] = full[j][i] = d
    scales = doc.get("scales")
    if not isinstance(scales, list) or not scales:
        raise ParseError("scales must be a nonempty list", "scales")
    return from_metric(pts, full, [_as_rational(s, "scales") for s in scales])


def _parse_builtin(doc) -> BornCoarseSpace:
    name = doc.get("name")
    radius = doc.get("radius")
    if not isinstance(name, str):
        raise ParseError("builtin name must be a string", "name")
    if not isinstance(radius, int) or isinstance(radius, bool):
        raise ParseError("radius must be an integer", "radius")
    return windowed_builtin(name, radius)


def emit_space(X: BornCoarseSpace) -> dict:
    """Canonical document for a space; parse_space(emit_space(X)) rebuilds it."""
    if X.window_tag is not None:
        return {"kind": "builtin", "name": X.window_tag.name, "radius": X.window_tag.radius}
    metric_doc = _try_emit_metric(X)
    if metric_doc is not None:
        return metric_doc
    pts = list(X.points)
    return {
        "kind": "explicit",
        "points": [str(p) for p in pts],
        "entourages": [
            sorted([str(a), str(b)] for a, b in e.pairs) for e in X.coarse.generators
        ],
        "bornology": [sorted(str(p) for p in b) for b in X.bornology.generators],
    }


def _try_emit_metric(X) -> Optional[dict]:
    if X.metric is None:
        return None
    pts = list(X.points)
    if X.bornology.generators != (frozenset(pts),) and list(X.bornology.generators) != [frozenset(pts)]:
        return None
    dist = {(a, b): X.metric(a, b) for a in pts for b in pts}
    realized = sorted({d for d in dist.values() if d > 0})
    scales = []
    for e in X.coarse.generators:
        worst = max((dist[p] for p in e.pairs), default=Fraction(0))
        above = [d for d in realized if d > worst]
        r = above[0] if above else worst + 1
        if {(a, b) for a, b in dist if a != b and dist[(a, b)] < r} != {
            (a, b) for a, b in e.pairs if a != b
        }:
            return None
        scales.append(r)
    if scales != sorted(set(scales)):
        return None
    return {
        "kind": "metric",
        "points": [str(p) for p in pts],
        "distances": [
            [_rational_token(dist[(pts[i], pts[j])]) for j in range(i)] for i in range(len(pts))
        ],
        "scales": [_rational_token(s) for s in scales],
    }


def emit_space_text(X: BornCoarseSpace) -> str:
    return json.dumps(emit_space(X), sort_keys=True, indent=2) + "\n"


# -------------------------------------------------- builtin conveniences


def _convenience_document(name) -> Optional[dict]:
    if name == "point":
        return {"kind": "explicit", "points": ["*"], "entourages": [], "bornology": [["*"]]}
    if name == "hexagon":
        pts = [str(i) for i in range(6)]
        edges = [[str(i), str((i + 1) % 6)] for i in range(6)]
        return {"kind": "explicit", "points": pts, "entourages": [edges], "bornology": [pts]}
    return None


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _resolve_space(ref: str) -> Tuple[BornCoarseSpace, str]:
    """Space plus input digest, from a file path or a convenience name."""
    doc = _convenience_document(ref)
    if doc is not None:
        blob = json.dumps(doc, sort_keys=True).encode()
        return parse_space(doc), _digest(blob)
    try:
        with open(ref, "rb") as fh:
            blob = fh.read()
    except OSError as e:
        raise ParseError(f"cannot read space {ref!r}: {e.strerror}")
    return parse_space(blob.decode("utf-8")), _digest(blob)


def _match_point(X, raw, field_name):
    if raw in X.ground:
        return raw
    if isinstance(raw, list):
        cand = tuple(raw)
        if cand in X.ground:
            return cand
    by_token = {str(p): p for p in X.points}
    if str(raw) in by_token:
        return by_token[str(raw)]
    raise ParseError(f"{raw!r} names no point of the space", field_name)


def _match_subset(X, raw_list, field_name):
    if not isinstance(raw_list, list):
        raise ParseError(f"{field_name} must be a JSON list", field_name)
    return [_match_point(X, r, field_name) for r in raw_list]


def _json_flag(text, field_name):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"bad JSON in --{field_name}: {e}", field_name)


# -------------------------------------------------------------- map files


def parse_map_file(path: str) -> Tuple[SpaceMap, Dict[str, str]]:
    """Two space references, then one 'source -> target' line per point."""
    import os

    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as e:
        raise ParseError(f"cannot read map {path!r}: {e.strerror}")
    lines = [ln.strip() for ln in blob.decode("utf-8").splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if len(lines) < 2:
        raise ParseError("map file needs two space references before the pair lines")
    base = os.path.dirname(path)

    def ref(token):
        if _convenience_document(token) is not None:
            return token
        return token if os.path.isabs(token) or os.path.exists(token) else os.path.join(base, token)

    src, d_src = _resolve_space(ref(lines[0]))
    tgt, d_tgt = _resolve_space(ref(lines[1]))
    src_tokens = {str(p): p for p in src.points}
    tgt_tokens = {str(p): p for p in tgt.points}
    table = {}
    for ln in lines[2:]:
        arrow = "->" if "->" in ln else ("→" if "→" in ln else None)
        if arrow is None:
            raise ParseError(f"map line {ln!r} has no '->'")
        a, b = (part.strip() for part in ln.split(arrow, 1))
        if a not in src_tokens:
            raise ParseError(f"{a!r} names no source point")
        if b not in tgt_tokens:
            raise ParseError(f"{b!r} names no target point")
        table[src_tokens[a]] = tgt_tokens[b]
    digests = {"map": _digest(blob), "map.source": d_src, "map.target": d_tgt}
    return SpaceMap(src, tgt, table), digests


# ---------------------------------------------------------------- reports


@dataclass
class Report:
    command: str
    input_digest: Dict[str, str] = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    refusals: List[dict] = field(default_factory=list)

    def to_json(self) -> str:
        body = {
            "command": self.command,
            "input_digest": self.input_digest,
            "refusals": self.refusals,
            "results": self.results,
            "warnings": self.warnings,
        }
        return json.dumps(body, sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"command: {self.command}"]
        for label in sorted(self.input_digest):
            lines.append(f"input digest [{label}]: {self.input_digest[label]}")
        lines.extend(_flatten("results", self.results))
        for w in self.warnings:
            lines.append(f"warning: {w}")
        for r in self.refusals:
            lines.append(f"refusal [{r['error']}]: {r['detail']}")
        return "\n".join(lines) + "\n"


def _flatten(prefix, obj):
    if isinstance(obj, dict):
        out = []
        for k in sorted(obj, key=str):
            out.extend(_flatten(f"{prefix}.{k}", obj[k]))
        return out
    if isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            return [f"{prefix}: [{', '.join(str(v) for v in obj)}]"]
        out = []
        for i, v in enumerate(obj):
            out.extend(_flatten(f"{prefix}[{i}]", v))
        return out
    return [f"{prefix}: {obj}"]


def _group_json(g: FGAbGroup, degree) -> dict:
    return {"degree": degree, "free_rank": g.free_rank, "torsion": list(g.torsion)}


def _groups_json(groups) -> list:
    return [_group_json(g, i) for i, g in enumerate(groups)]


def _tokens(points, X) -> list:
    order = {p: i for i, p in enumerate(X.points)}
    return [str(p) for p in sorted(points, key=order.get)]


# ----------------------------------------------------------- CLI plumbing


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="coarsehom",
        description="Exact computations on finite bornological coarse spaces.",
    )
    sub = top.add_subparsers(dest="command", required=True, metavar="|".join(COMMANDS))

    def common(p, space=True):
        if space:
            p.add_argument("--space", required=True,
                           help="space document file, or a builtin name (point, hexagon)")
        p.add_argument("--out", help="write the report to this file instead of stdout")
        p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("components", help="coarse components at the stabilized scale")
    common(p)

    p = sub.add_parser("homology", help="homology at a scale or at the colimit")
    common(p)
    p.add_argument("--scale", type=int)
    p.add_argument("--colimit", action="store_true")
    p.add_argument("--max-dim", type=int, default=DEFAULT_DEGREE_CAP)
    p.add_argument("--basis-cap", type=int, default=DEFAULT_BASIS_CAP)

    p = sub.add_parser("qhomology", help="coarsified homology over measure complexes")
    common(p)
    p.add_argument("--scales", default="", help="comma-separated scale list")
    p.add_argument("--max-dim", type=int, default=2)

    p = sub.add_parser("nerve", help="nerve of the greedy ball cover at a scale")
    common(p)
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--max-dim", type=int, default=2)

    p = sub.add_parser("anti-cech", help="anti-Cech prefix over increasing scales")
    common(p)
    p.add_argument("--scales", required=True)

    p = sub.add_parser("telescope", help="coarsening telescope over an anti-Cech prefix")
    common(p)
    p.add_argument("--scales", required=True)
    p.add_argument("--max-dim", type=int, default=1)

    p = sub.add_parser("asdim", help="asymptotic dimension upper-bound search")
    common(p)
    p.add_argument("--scales", required=True)
    p.add_argument("--budget", type=int, default=8)

    p = sub.add_parser("check-morphism", help="controlled/proper verdict for a map")
    common(p, space=False)
    p.add_argument("--map", required=True)

    p = sub.add_parser("close", help="closeness verdict for two maps")
    common(p, space=False)
    p.add_argument("--map", action="append", required=True,
                   help="give twice: the two maps to compare")

    p = sub.add_parser("equivalence", help="coarse-equivalence verdict for f and g")
    common(p, space=False)
    p.add_argument("--map", action="append", required=True,
                   help="give twice: f then its candidate inverse g")

    p = sub.add_parser("flasque", help="flasqueness certificate for a self-map")
    common(p)
    p.add_argument("--map", required=True)
    p.add_argument("--scale-cap", type=int, default=4)
    p.add_argument("--iter-cap", type=int, default=64)

    p = sub.add_parser("mv-check", help="two-set excision comparison")
    common(p)
    p.add_argument("--subset", required=True, help="JSON list naming the complementary subset")
    p.add_argument("--family-base", required=True, help="JSON list naming the thickening base")
    p.add_argument("--family-depth", type=int, required=True)
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--max-dim", type=int, default=2)

    p = sub.add_parser("hybrid", help="hybrid relation from a family and phi")
    common(p)
    p.add_argument("--family", help="JSON list of nested member lists")
    p.add_argument("--family-base", help="JSON list; thickenings up to --family-depth")
    p.add_argument("--family-depth", type=int, default=0)
    p.add_argument("--phi", required=True, help="JSON list, one scale per member, non-increasing")
    p.add_argument("--scale", type=int, required=True, help="base closure scale")

    p = sub.add_parser("udecomp", help="uniform decomposition certificate over listed radii")
    common(p)
    p.add_argument("--part-y", required=True, help="JSON list")
    p.add_argument("--part-z", required=True, help="JSON list")
    p.add_argument("--radii", required=True, help="JSON list of decreasing positive rationals")

    p = sub.add_parser("snf", help="Smith normal form of an integer matrix file")
    common(p, space=False)
    p.add_argument("--matrix", required=True, help="JSON file: list of integer rows")

    return top


def _parse_scales(text, field_name="scales"):
    raw = text.strip()
    if raw.startswith("["):
        vals = _json_flag(raw, field_name)
    else:
        vals = [tok for tok in raw.split(",") if tok.strip()]
    out = []
    for v in vals:
        try:
            out.append(int(v))
        except (TypeError, ValueError):
            raise ParseError(f"scale {v!r} is not an integer", field_name)
    if not out:
        raise ParseError("at least one scale is required", field_name)
    return out


# ----------------------------------------------------------- subcommands


def _cmd_components(args, rep: Report):
    X, dig = _resolve_space(args.space)
    rep.input_digest["space"] = dig
    comps = coarse_components(X)
    order = {p: i for i, p in enumerate(X.points)}
    comps = sorted(comps, key=lambda c: min(order[p] for p in c))
    rep.results = {
        "count": len(comps),
        "components": [_tokens(c, X) for c in comps],
        "scale": "stabilized",
    }


def _window_warning(X, rep):
    if X.window_tag is not None:
        rep.warnings.append(
            f"window-relative: {X.window_tag.name} window of radius {X.window_tag.radius}"
        )


def _cmd_homology(args, rep: Report):
    X, dig = _resolve_space(args.space)
    rep.input_digest["space"] = dig
    if args.colimit == (args.scale is not None):
        raise ParseError("give exactly one of --scale or --colimit", "scale")
    if args.colimit:
        groups, stab = homology_colimit(X, args.max_dim, args.basis_cap)
        rep.results = {
            "mode": "colimit",
            "stable_scale": stab.stable_scale,
            "groups": _groups_json(groups),
            "per_scale": {str(k): _groups_json(v) for k, v in stab.per_scale.items()},
        }
        rep.warnings.extend(stab.warnings)
    else:
        groups = homology_at_scale(X, args.scale, args.max_dim, args.basis_cap)
        rep.results = {
            "mode": "at-scale",
            "scale": args.scale,
            "groups": _groups_json(groups),
        }
        _window_warning(X, rep)


def _cmd_qhomology(args, rep: Report):
    X, dig = _resolve_space(args.space)
    rep.input_digest["space"] = dig
    scales = _parse_scales(args.scales) if args.scales.strip() else []
    out = coarsify_homology(X, scales, args.max_dim)
    rep.results = {
        "table": {str(k): _groups_json(v) for k, v in out.table.items()},
        "stable_scale": out.stable_scale,
        "terminal": _groups_json(out.terminal),
    }
    rep.warnings.extend(out.notes)


def _cmd_nerve(args, rep: Report):
    X, dig = _resolve_space(args.space)
    rep.input_digest["space"] = dig
    cov = cover_from_net(X, args.scale)
    nv = nerve(cov, args.max_dim + 1)
    rep.results = {
        "scale": args.scale,
        "members": [_tokens(m, X) for m in cov.members],
        "bound_scale": cov.bound_scale,
        "lebesgue_scale": cov.lebesgue_scale,
        "simplex_counts": [len(s) for s in nv.simplices],
        "groups": _groups_json(nv.homology(args.max_dim)),
    }
    rep.warnings.extend(cov.notes)
    _window_warning(X, rep)


def _cmd_anti_cech(args, rep: Report):
    X, dig = _resolve_space(args.space)
    rep.input_digest["space"] = dig
    pre = anti_cech(X, _parse_scales(args.scales))
    rep.results = {
        "scales": list(pre.scales),
        "member_counts": [len(c.members) for c in pre.covers],
        "certificates": list(pre.certificates),
        "refinements": [list(k) for k in pre.refinements],
    }
    _window_warning(X, rep)


def _cmd_telescope(args, rep: Report):
    X, dig = _resolve_space(args.space)
    rep.input_digest["space"] = dig
    pre = anti_cech(X, _parse_scales(args.scales))
    tele, groups = coarsening_space(pre, args.max_dim)
    rep.results = {
        "scales": list(pre.scales),
        "vertices": len(tele.vertices),
        "simplex_counts": [len(s) for s in tele.simplices],
        "groups": _groups_json(groups),
    }
    _window_warning(X, rep)


def _cmd_asdim(args, rep: Report):
    X, dig = _resolve_space(args.space)
    rep.input_digest["space"] = dig
    out = asdim_upper_bound(X, _parse_scales(args.scales), args.budget)
    rep.results = {
        "per_scale": {str(k): v for k, v in out.per_scale.items()},
        "upper_bound": out.upper_bound,
        "budget": out.budget,
    }
    rep.warnings.extend(out.notes)


def _cmd_check_morphism(args, rep: Report):
    f, digs = parse_map_file(args.map)
    rep.input_digest.update(digs)
    verdict = check_morphism(f)
    rep.results = {
        "controlled": verdict.controlled,
        "proper": verdict.proper,
        "morphism": verdict.is_morphism,
        "scale_shift": {str(k): v for k, v in sorted(verdict.scale_shift.items())},
        "controlled_witness": list(map(str, verdict.controlled_witness))
        if verdict.controlled_witness else None,
        "proper_witness": sorted(map(str, verdict.proper_witness))
        if verdict.proper_witness else None,
    }


def _two_maps(args, rep):
    if len(args.map) != 2:
        raise ParseError("give --map exactly twice", "map")
    f, d1 = parse_map_file(args.map[0])
    g, d2 = parse_map_file(args.map[1])
    rep.input_digest.update({f"f.{k}" if k != "map" else "map.f": v for k, v in d1.items()})
    rep.input_digest.update({f"g.{k}" if k != "map" else "map.g": v for k, v in d2.items()})
    return f, g


def _cmd_close(args, rep: Report):
    f, g = _two_maps(args, rep)
    k = are_close(f, g)
    rep.results = {"close": k is not None, "closeness": k}


def _cmd_equivalence(args, rep: Report):
    f, g = _two_maps(args, rep)
    verdict = check_equivalence(f, g)
    rep.results = {
        "equivalence": verdict.equivalence,
        "k_source": verdict.k_source,
        "k_target": verdict.k_target,
        "f_morphism": verdict.f_report.is_morphism,
        "g_morphism": verdict.g_report.is_morphism,
    }


def _cmd_flasque(args, rep: Report):
    X, dig = _resolve_space(args.space)
    rep.input_digest["space"] = dig
    f, digs = parse_map_file(args.map)
    rep.input_digest.update(digs)
    if f.source is not X and f.source != X:
        raise CoarseError("the map's source differs from --space")
    out = certify_flasque(X, f, scale_cap=args.scale_cap, iter_cap=args.iter_cap)
    if isinstance(out, FlasqueRefusal):
        rep.refusals.append({
            "error": "FlasqueRefusal",
            "detail": f"condition {out.condition}: {out.explanation}",
        })
        return
    rep.results = {
        "window": out.window,
        "cond1_scale": out.cond1_scale,
        "cond2_table": {str(k): v for k, v in sorted(out.cond2_table.items())},
        "cond3_table": [
            {"generator_size": len(B), "escapes_at_iterate": j}
            for B, j in sorted(out.cond3_table.items(), key=lambda kv: (len(kv[0]), kv[1]))
        ],
        "iter_cap": out.iter_cap,
        "scale_cap": out.scale_cap,
        "clamp_count": out.clamp_count,
    }
    rep.warnings.extend(out.warnings)


def _cmd_mv_check(args, rep: Report):
    X, dig = _resolve_space(args.space)
    rep.input_digest["space"] = dig
    Z = _match_subset(X, _json_flag(args.subset, "subset"), "subset")
    base = _match_subset(X, _json_flag(args.family_base, "family-base"), "family-base")
    fam = big_family_generated(X, base, args.family_depth)
    out = mv_check(X, Z, fam, args.scale, args.max_dim)
    rep.results = {
        "scale": out.scale,
        "complement_index": out.complement_index,
        "prefix_index": out.prefix_index,
        "iso": out.iso,
        "all_iso": out.all_iso,
        "basis_bijection": out.basis_bijection,
        "groups_subset": _groups_json(out.groups_sub),
        "groups_space": _groups_json(out.groups_full),
    }
    rep.warnings.extend(out.warnings)


def _cmd_hybrid(args, rep: Report):
    X, dig = _resolve_space(args.space)
    rep.input_digest["space"] = dig
    if (args.family is None) == (args.family_base is None):
        raise ParseError("give exactly one of --family or --family-base", "family")
    if args.family is not None:
        members = [_match_subset(X, m, "family") for m in _json_flag(args.family, "family")]
        fam = make_big_family(X, members, scale_cap=0)
    else:
        base = _match_subset(X, _json_flag(args.family_base, "family-base"), "family-base")
        fam = big_family_generated(X, base, args.family_depth)
    phi = _json_flag(args.phi, "phi")
    U = hybrid_entourage(X, fam, phi, args.scale)
    order = {p: i for i, p in enumerate(X.points)}
    pairs = sorted(U.pairs, key=lambda ab: (order[ab[0]], order[ab[1]]))
    rep.results = {
        "base_scale": args.scale,
        "pair_count": len(pairs),
        "pairs": [[str(a), str(b)] for a, b in pairs],
    }
    _window_warning(X, rep)


def _cmd_udecomp(args, rep: Report):
    X, dig = _resolve_space(args.space)
    rep.input_digest["space"] = dig
    Y = _match_subset(X, _json_flag(args.part_y, "part-y"), "part-y")
    Z = _match_subset(X, _json_flag(args.part_z, "part-z"), "part-z")
    radii = [_as_rational(r, "radii") for r in _json_flag(args.radii, "radii")]
    out = uniform_decomposition_check(X, Y, Z, radii)
    rep.results = {
        "ok": out.ok,
        "assignments": [
            {"r": _rational_token(r), "s": _rational_token(s) if s is not None else None}
            for r, s in out.assignments
        ],
    }
    rep.warnings.extend(out.notes)


def _cmd_snf(args, rep: Report):
    try:
        with open(args.matrix, "rb") as fh:
            blob = fh.read()
    except OSError as e:
        raise ParseError(f"cannot read matrix {args.matrix!r}: {e.strerror}")
    rep.input_digest["matrix"] = _digest(blob)
    rows = _json_flag(blob.decode("utf-8"), "matrix")
    if not isinstance(rows, list) or any(not isinstance(r, list) for r in rows):
        raise ParseError("matrix must be a JSON list of rows", "matrix")
    for r in rows:
        for v in r:
            if not isinstance(v, int) or isinstance(v, bool):
                raise ParseError(f"matrix entry {v!r} is not an integer", "matrix")
    res = smith_normal_form(rows)
    m, n = res.shape
    recon = [
        [
            sum(res.U[i][a] * res.S[a][b] * res.V[b][j] for a in range(m) for b in range(n))
            for j in range(n)
        ]
        for i in range(m)
    ] == [list(map(int, r)) for r in rows]
    rep.results = {
        "shape": [m, n],
        "rank": res.rank,
        "invariant_factors": res.invariant_factors,
        "torsion": [d for d in res.invariant_factors if d >= 2],
        "reconstruction_verified": recon,
    }


_HANDLERS = {
    "components": _cmd_components,
    "homology": _cmd_homology,
    "qhomology": _cmd_qhomology,
    "nerve": _cmd_nerve,
    "anti-cech": _cmd_anti_cech,
    "telescope": _cmd_telescope,
    "asdim": _cmd_asdim,
    "check-morphism": _cmd_check_morphism,
    "close": _cmd_close,
    "equivalence": _cmd_equivalence,
    "flasque": _cmd_flasque,
    "mv-check": _cmd_mv_check,
    "hybrid": _cmd_hybrid,
    "udecomp": _cmd_udecomp,
    "snf": _cmd_snf,
}


def run(argv: Sequence[str]) -> Tuple[Report, int]:
    """Execute one command line; returns the report and the exit code.

    0 success, 1 refusal or domain error, 2 usage or parse error.  The
    formatted report goes to --out or stdout; parse errors go to stderr.
    """
    argv = list(argv)
    if argv and not argv[0].startswith("-") and argv[0] not in COMMANDS:
        print(f"unknown command {argv[0]!r}; expected one of {', '.join(COMMANDS)}",
              file=sys.stderr)
        return Report(command=" ".join(argv)), 2
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return Report(command=" ".join(argv)), (e.code if e.code else 2)
    rep = Report(command=" ".join(argv))
    code = 0
    try:
        _HANDLERS[args.command](args, rep)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return rep, 2
    except CoarseError as e:
        rep.refusals.append({"error": type(e).__name__, "detail": str(e)})
    if rep.refusals:
        code = 1
    text = rep.to_json() if args.format == "json" else rep.to_text()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return rep, code


def main(argv=None) -> int:
    _, code = run(sys.argv[1:] if argv is None else argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
