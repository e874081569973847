"""
Command-line entry point: one subcommand per workbench operation.

Every subcommand builds a `Report`, prints it (text or JSON) and exits with 0 when the
computation succeeded and every checked property holds, 1 when a checked property fails
(the report carries the witness) and 2 on malformed input or a tripped enumeration guard.
"""

import functools
import json
import logging
import random
import time
from dataclasses import dataclass, field
from typing import Any

import click

from toposkit.classifier import (
    NotMonoError,
    characteristic,
    default_corpus,
    omega,
    pull_back_truth,
    subobjects,
    verify_classifier,
)
from toposkit.config import EnumerationGuard, set_max_enum
from toposkit.errors import ResourceLimitError, ToposkitError, ValidationError
from toposkit.etcs import Audit, run_audits
from toposkit.fincat import FinCategory, FinFunctor, has_finite_limits
from toposkit.geom import (
    NotLexError,
    adjoint_triple,
    classify_lex,
    is_embedding,
    lex_functors,
    points,
    probe_corpus,
    round_trip_isomorphisms,
    sheaf_inclusion,
    space_morphism,
    verify_geometric,
)
from toposkit.internal import (
    ExpressionSyntaxError,
    FieldVariant,
    IdentityMethod,
    check_field,
    check_field_variant,
    check_group,
    check_identity,
    parse_statement,
)
from toposkit.psh import (
    Presheaf,
    PresheafMap,
    compose_maps,
    factor_epi_mono,
    find_isomorphisms,
    is_epi,
    is_mono,
    iter_maps,
    pullback,
    terminal,
)
from toposkit.reports import Certificate, FailedCheck, ValidationReport
from toposkit.sites import (
    enumerate_lt_operators,
    enumerate_topologies,
    is_sheaf,
    j_to_topology,
    sheafify,
    topology_to_j,
)
from toposkit.spaces import (
    DiscontinuousMapError,
    canonical_topology,
    etale_space,
    frame_points,
    is_etale,
    is_sober,
    is_t0,
    open_frame,
    recover_locale,
    sections_sheaf,
)
from toposkit.workspace import ArtifactKind, Workspace, WorkspaceError

log = logging.getLogger(__name__)

SCHEMA = 1


class InputError(click.ClickException):
    exit_code = 2


@dataclass(kw_only=True)
class Report:
    command: str
    # (name or path, sha256 of the defining file)
    inputs: list[tuple[str, str]] = field(default_factory=list)
    verdict: str = "ok"
    ok: bool = True
    lines: list[str] = field(default_factory=list)
    data: dict[str, Any] = field(default_factory=dict)
    witness: Any = None
    timing: float = 0.0

    def say(self, line: str = "") -> None:
        self.lines.append(line)

    def fail(self, verdict: str, witness: Any = None) -> None:
        self.ok = False
        self.verdict = verdict
        self.witness = witness

    def certificate(self, cert: Certificate) -> None:
        self.say(f"certificate: {cert.subject}")
        for record in cert.records:
            mark = "FAIL" if isinstance(record, FailedCheck) else "ok"
            self.say(f"  [{mark}] {record.name}: {record.detail}")
        self.data["checks"] = {"passed": len(cert.passed()), "failed": len(cert.failed())}
        if not cert.ok:
            failure = cert.first_failure
            self.fail(f"{failure.name} fails", failure.witness)

    def validation(self, report: ValidationReport) -> None:
        self.say(str(report))
        if not report.ok:
            first = report.violations[0]
            self.fail(f"{first.law} fails", first.witness)

    def render(self, as_json: bool) -> str:
        if as_json:
            payload = {
                "schema": SCHEMA,
                "command": self.command,
                "inputs": [{"name": name, "sha256": digest} for name, digest in self.inputs],
                "verdict": self.verdict,
                "ok": self.ok,
                "lines": self.lines,
                "data": plain(self.data),
                "witness": plain(self.witness),
                "timing": round(self.timing, 6),
            }
            return json.dumps(payload, indent=2)
        out = [f"command: {self.command}"]
        out += [f"input: {name} sha256:{digest}" for name, digest in self.inputs]
        out += self.lines
        if self.witness is not None:
            out.append(f"witness: {json.dumps(plain(self.witness))}")
        out.append(f"verdict: {self.verdict}")
        out.append(f"timing: {self.timing:.3f}s")
        return "\n".join(out)


@dataclass(kw_only=True)
class Session:
    workspace: Workspace
    as_json: bool = False
    seed: int = 0
    report: Report | None = None

    def guard(self, what: str) -> EnumerationGuard:
        return EnumerationGuard(what=what)

    def resolve(self, reference: str, kind: ArtifactKind) -> Any:
        value = self.workspace.resolve(reference, kind)
        self._record(reference)
        return value

    def resolve_any(self, reference: str, *kinds: ArtifactKind) -> tuple[ArtifactKind, Any]:
        """The first of `kinds` the reference resolves to."""
        last = None
        for kind in kinds:
            try:
                return kind, self.resolve(reference, kind)
            except WorkspaceError as e:
                last = e
        raise last

    def _record(self, reference: str) -> None:
        sources = self.workspace.sources
        if reference in sources:
            entry = (reference, sources[reference])
        else:
            name = reference.split("(")[-1].rstrip(")")
            artifact = self.workspace.artifacts.get(name)
            entry = (reference, sources.get(artifact.path, "") if artifact else "")
        if entry not in self.report.inputs:
            self.report.inputs.append(entry)


INPUT_ERRORS = (
    WorkspaceError,
    ResourceLimitError,
    ValidationError,
    ExpressionSyntaxError,
    DiscontinuousMapError,
)


def reporting(f):
    """Run a subcommand body on a fresh `Report`, then print it and exit with its code."""

    @click.pass_obj
    @functools.wraps(f)
    def wrapper(session: Session, *args, **kwargs):
        report = Report(command=click.get_current_context().command_path.split(" ", 1)[-1])
        session.report = report
        start = time.perf_counter()
        try:
            f(session, report, *args, **kwargs)
        except INPUT_ERRORS as e:
            raise InputError(str(e))
        except ToposkitError as e:
            raise InputError(f"{type(e).__name__}: {e}")
        report.timing = time.perf_counter() - start
        click.echo(report.render(session.as_json))
        if not report.ok:
            click.get_current_context().exit(1)

    return wrapper


def plain(value: Any) -> Any:
    """JSON-ready form of a witness; maps and presheaves appear by name and tables."""
    match value:
        case None | bool() | int() | float() | str():
            return value
        case PresheafMap():
            return {
                "map": value.name,
                "source": value.source.name,
                "target": value.target.name,
                "components": {a: list(c) for a, c in value.components.items()},
            }
        case Presheaf():
            return {"presheaf": value.name, "sizes": value.sizes()}
        case dict():
            return {str(k): plain(v) for k, v in value.items()}
        case tuple() | list():
            return [plain(v) for v in value]
        case frozenset() | set():
            return sorted(map(str, value))
    return str(value)


def labels(presheaf: Presheaf, a: str) -> str:
    return "{" + ", ".join(str(presheaf.label(a, x)) for x in presheaf.elements(a)) + "}"


def describe_presheaf(report: Report, presheaf: Presheaf, indent: str = "  ") -> None:
    for a in presheaf.base.objects:
        report.say(f"{indent}{presheaf.name or 'P'}({a}) = {labels(presheaf, a)}")


def describe_map(report: Report, h: PresheafMap, indent: str = "  ") -> None:
    for a in h.base.objects:
        pairs = ", ".join(
            f"{h.source.label(a, x)} -> {h.target.label(a, h(a, x))}" for x in h.source.elements(a)
        )
        report.say(f"{indent}{a}: {pairs}")


@click.group()
@click.option(
    "-w",
    "--workspace",
    "workspaces",
    multiple=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Workspace file to load before resolving targets (repeatable).",
)
@click.option("--json", "as_json", is_flag=True, help="Emit the report as JSON.")
@click.option(
    "--max-enum", type=int, default=None, help="Enumeration bound (overrides TOPOSKIT_MAX_ENUM)."
)
@click.option(
    "--seed", type=int, default=0, show_default=True, help="Seed of the randomized law suites."
)
@click.option("--verbose", is_flag=True, help="Debug logging on stderr.")
@click.pass_context
def cli(
    ctx: click.Context,
    workspaces: tuple[str, ...],
    as_json: bool,
    max_enum: int | None,
    seed: int,
    verbose: bool,
):
    """Exact finite topos theory workbench."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    set_max_enum(max_enum)
    workspace = Workspace()
    try:
        for path in workspaces:
            workspace.load(path)
    except WorkspaceError as e:
        raise InputError(str(e))
    ctx.obj = Session(workspace=workspace, as_json=as_json, seed=seed)


@cli.command("validate")
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@reporting
def validate_command(session: Session, report: Report, paths: tuple[str, ...]):
    """Load and validate workspace files."""
    for path in paths:
        for artifact in session.workspace.load(path):
            report.say(f"{artifact.kind} {artifact.name} ({artifact.path}:{artifact.line}): ok")
        report.inputs.append((path, session.workspace.sources[path]))
    report.data["artifacts"] = len(session.workspace)
    report.say(f"artifacts: {len(session.workspace)}")


@cli.command("omega")
@click.argument("category")
@reporting
def omega_command(session: Session, report: Report, category: str):
    """Subobject classifier of presheaves on a category."""
    base = session.resolve(category, ArtifactKind.CATEGORY)
    classifier = omega(base)
    sizes = classifier.omega.sizes()
    report.say(f"sizes: {sizes}")
    describe_presheaf(report, classifier.omega)
    report.say("true:")
    describe_map(report, classifier.truth)
    report.data["sizes"] = sizes


@cli.command("char")
@click.argument("mono")
@reporting
def char_command(session: Session, report: Report, mono: str):
    """Characteristic map of a mono."""
    m = session.resolve(mono, ArtifactKind.PRESHEAF_MAP)
    try:
        chi = characteristic(m)
    except NotMonoError as e:
        report.fail("not a mono", (e.obj, *e.pair))
        return
    report.say(f"chi: {m.target.name} -> Omega")
    describe_map(report, chi)
    recovered = pull_back_truth(chi)
    report.say(f"pullback of true: {recovered}")


@cli.command("sub")
@click.argument("presheaf")
@reporting
def sub_command(session: Session, report: Report, presheaf: str):
    """Subobject lattice, checked against Hom(X, Omega)."""
    carrier = session.resolve(presheaf, ArtifactKind.PRESHEAF)
    lattice = subobjects(carrier, session.guard("subobjects"))
    homs = sum(1 for _ in iter_maps(carrier, omega(carrier.base).omega, session.guard("maps")))
    report.say(f"|Sub({carrier.name})| = {len(lattice)}")
    for s in lattice:
        report.say(f"  {s}")
    report.say(f"|Hom({carrier.name}, Omega)| = {homs}")
    report.data.update(subobjects=len(lattice), homs=homs)
    if homs != len(lattice):
        report.fail("Sub(X) and Hom(X, Omega) differ in size", (len(lattice), homs))


@cli.command("verify-classifier")
@click.argument("category")
@reporting
def verify_classifier_command(session: Session, report: Report, category: str):
    """Certify the subobject classifier on the default corpus."""
    base = session.resolve(category, ArtifactKind.CATEGORY)
    guard = session.guard("classifier checks")
    report.certificate(verify_classifier(base, default_corpus(base), guard))


@cli.command("topologies")
@click.argument("category")
@reporting
def topologies_command(session: Session, report: Report, category: str):
    """Grothendieck topologies, matched against Lawvere-Tierney operators."""
    base = session.resolve(category, ArtifactKind.CATEGORY)
    topologies = enumerate_topologies(base, session.guard("cover assignments"))
    operators = enumerate_lt_operators(base, session.guard("operators"))
    for topology in topologies:
        report.say(f"{topology.name}:")
        for a in base.objects:
            report.say(f"  {a}: " + " ".join(str(s) for s in topology.covering(a)))
    report.say(f"topologies: {len(topologies)}")
    report.say(f"lt-operators: {len(operators)}")
    report.data.update(topologies=len(topologies), operators=len(operators))
    if len(topologies) != len(operators):
        report.fail("counts differ", (len(topologies), len(operators)))
        return
    for topology in topologies:
        if j_to_topology(topology_to_j(topology)) != topology:
            report.fail("J -> j -> J is not the identity", topology.name)
            return
    for operator in operators:
        if topology_to_j(j_to_topology(operator)) != operator:
            report.fail("j -> J -> j is not the identity", operator.j.key())
            return


@cli.command("lt-ops")
@click.argument("category")
@reporting
def lt_ops_command(session: Session, report: Report, category: str):
    """Lawvere-Tierney operators on Omega."""
    base = session.resolve(category, ArtifactKind.CATEGORY)
    classifier = omega(base)
    operators = enumerate_lt_operators(base, session.guard("operators"))
    for n, operator in enumerate(operators):
        report.say(f"j{n}:")
        for a in base.objects:
            moves = ", ".join(
                f"{classifier.sieve(a, k)} -> {operator.apply(classifier.sieve(a, k))}"
                for k in classifier.omega.elements(a)
            )
            report.say(f"  {a}: {moves}")
    report.say(f"lt-operators: {len(operators)}")
    report.data["operators"] = len(operators)


@cli.command("is-sheaf")
@click.argument("presheaf")
@click.argument("topology")
@reporting
def is_sheaf_command(session: Session, report: Report, presheaf: str, topology: str):
    """Check the sheaf condition for every covering sieve."""
    p = session.resolve(presheaf, ArtifactKind.PRESHEAF)
    j = session.resolve(topology, ArtifactKind.TOPOLOGY)
    result = is_sheaf(p, j, session.guard("matching families"))
    if result.is_sheaf:
        report.say(f"{p.name} is a sheaf")
        return
    report.say(f"failing cover: {result.sieve} on {result.object} ({result.failure})")
    report.fail(
        "not a sheaf",
        {
            "object": result.object,
            "sieve": str(result.sieve),
            "failure": result.failure,
            "witness": result.witness,
        },
    )


@cli.command("sheafify")
@click.argument("presheaf")
@click.argument("topology")
@reporting
def sheafify_command(session: Session, report: Report, presheaf: str, topology: str):
    """Associated sheaf by two plus constructions."""
    p = session.resolve(presheaf, ArtifactKind.PRESHEAF)
    j = session.resolve(topology, ArtifactKind.TOPOLOGY)
    result = sheafify(p, j, session.guard("matching families"))
    sizes = [p.sizes(), result.first.presheaf.sizes(), result.presheaf.sizes()]
    report.say(f"sizes: {' -> '.join(map(str, sizes))}")
    describe_presheaf(report, result.presheaf)
    report.say("unit:")
    describe_map(report, result.unit)
    report.data["sizes"] = result.presheaf.sizes()
    check = is_sheaf(result.presheaf, j, session.guard("matching families"))
    if not check.is_sheaf:
        report.fail("result is not a sheaf", check.witness)


@cli.command("frame")
@click.argument("frame")
@reporting
def frame_command(session: Session, report: Report, frame: str):
    """Frame laws and Heyting negation."""
    lattice = session.resolve(frame, ArtifactKind.FRAME)
    report.validation(lattice.validate())
    if not report.ok:
        return
    report.say(f"elements: {len(lattice)}")
    report.say(f"top: {lattice.elements[lattice.top]}  bottom: {lattice.elements[lattice.bottom]}")
    for i, x in enumerate(lattice.elements):
        report.say(f"  not {x} = {lattice.elements[lattice.negation(i)]}")


@cli.command("canonical")
@click.argument("space")
@reporting
def canonical_command(session: Session, report: Report, space: str):
    """Canonical topology on the opens of a space."""
    x = session.resolve(space, ArtifactKind.SPACE)
    topology = canonical_topology(x).topology
    for a in topology.base.objects:
        report.say(f"  {a}: " + " ".join(str(s) for s in topology.covering(a)))
    report.validation(topology.validate())


@cli.command("sections")
@click.argument("bundle")
@reporting
def sections_command(session: Session, report: Report, bundle: str):
    """Sheaf of continuous sections of a bundle."""
    b = session.resolve(bundle, ArtifactKind.BUNDLE)
    sheaf = sections_sheaf(b, session.guard("sections"))
    describe_presheaf(report, sheaf)
    check = is_sheaf(sheaf, canonical_topology(b.base).topology)
    if not check.is_sheaf:
        report.fail("sections do not form a sheaf", check.witness)


@cli.command("etale")
@click.argument("presheaf")
@click.argument("space")
@reporting
def etale_command(session: Session, report: Report, presheaf: str, space: str):
    """Etale space of a sheaf, with the round trip back to sections."""
    sheaf = session.resolve(presheaf, ArtifactKind.PRESHEAF)
    x = session.resolve(space, ArtifactKind.SPACE)
    if sheaf.base != open_frame(x).category:
        raise InputError(f"{sheaf.name} is not a presheaf on the opens of {x.name}")
    bundle = etale_space(sheaf, x)
    report.say(f"germs: {' '.join(bundle.total.points)}")
    report.say(f"opens: {len(bundle.total.opens)}")
    if not is_etale(bundle):
        report.fail("projection is not a local homeomorphism")
        return
    back = sections_sheaf(bundle, session.guard("sections"))
    if next(find_isomorphisms(back, sheaf), None) is None:
        report.fail("sections of the etale space differ from the sheaf", back.sizes())


@cli.command("sober")
@click.argument("space")
@reporting
def sober_command(session: Session, report: Report, space: str):
    """Sobriety, compared with the T0 axiom."""
    x = session.resolve(space, ArtifactKind.SPACE)
    result = is_sober(x)
    report.say(f"t0: {is_t0(x)}")
    report.say(f"sober: {result.is_sober}")
    report.data["sober"] = result.is_sober
    if not result.is_sober:
        closed, generic = result.witnesses[0]
        report.fail("not sober", {"closed": sorted(closed, key=x.points.index), "generic": generic})


@cli.command("spatial")
@click.argument("target")
@reporting
def spatial_command(session: Session, report: Report, target: str):
    """Points of a frame (or of the opens of a space) and spatiality."""
    kind, value = session.resolve_any(target, ArtifactKind.FRAME, ArtifactKind.SPACE)
    lattice = value if kind == ArtifactKind.FRAME else open_frame(value).frame
    found = frame_points(lattice, session.guard("frame points"))
    report.say(f"points: {len(found)}")
    for p in found:
        report.say("  " + " ".join(str(lattice.elements[i]) for i in range(len(lattice)) if p(i)))
    report.data["points"] = len(found)
    for i in range(len(lattice)):
        for j in range(i + 1, len(lattice)):
            if not any(p(i) != p(j) for p in found):
                report.fail("not spatial", (lattice.elements[i], lattice.elements[j]))
                return


@cli.command("recover-locale")
@click.argument("space")
@reporting
def recover_locale_command(session: Session, report: Report, space: str):
    """Subterminal sheaves, compared with the frame of opens."""
    x = session.resolve(space, ArtifactKind.SPACE)
    recovery = recover_locale(x, session.guard("subobjects"))
    target = recovery.iso.target
    for i, element in enumerate(recovery.frame.elements):
        report.say(f"  {element} -> {target.elements[recovery.iso(i)]}")
    report.validation(recovery.iso.validate())
    if report.ok and not recovery.iso.is_bijective:
        report.fail("comparison is not bijective", recovery.iso.mapping)


def _corpus_sizes(report: Report, label: str, functor, corpus: list[Presheaf]) -> None:
    report.say(f"{label}:")
    for p in corpus:
        report.say(f"  {p.name}: {p.sizes()} -> {functor(p).sizes()}")


@cli.command("triple")
@click.argument("functor")
@reporting
def triple_command(session: Session, report: Report, functor: str):
    """Adjoint triple f_! -| f* -| f_* of a functor."""
    f: FinFunctor = session.resolve(functor, ArtifactKind.FUNCTOR)
    triple = adjoint_triple(f, session.guard("Kan extension cones"))
    source, target = probe_corpus(f.source), probe_corpus(f.target)
    _corpus_sizes(report, f"{f.name}_!", triple.lower, source)
    _corpus_sizes(report, f"{f.name}*", triple.middle, target)
    _corpus_sizes(report, f"{f.name}_*", triple.upper, source)
    report.certificate(triple.verify(source, target))


@cli.command("verify-gm")
@click.argument("target")
@reporting
def verify_gm_command(session: Session, report: Report, target: str):
    """Certify a geometric morphism: from a functor, a continuous map or a topology."""
    kind, value = session.resolve_any(
        target, ArtifactKind.FUNCTOR, ArtifactKind.CONTINUOUS, ArtifactKind.TOPOLOGY
    )
    guard = session.guard("geometric morphism checks")
    match kind:
        case ArtifactKind.FUNCTOR:
            triple = adjoint_triple(value, guard)
            morphism = triple.morphism(probe_corpus(value.source), probe_corpus(value.target))
        case ArtifactKind.CONTINUOUS:
            morphism = space_morphism(value, guard)
        case _:
            morphism = sheaf_inclusion(value, guard=guard)
    report.say(f"morphism: {morphism.name}")
    report.certificate(verify_geometric(morphism))
    embedding = is_embedding(morphism)
    report.say(f"embedding: {embedding.is_embedding}")
    report.data["embedding"] = embedding.is_embedding


@cli.command("points")
@click.argument("category")
@click.option(
    "--max-size", type=int, default=3, show_default=True, help="Bound on the sets of each point."
)
@reporting
def points_command(session: Session, report: Report, category: str, max_size: int):
    """Points of the presheaf topos: flat functors up to iso."""
    base: FinCategory = session.resolve(category, ArtifactKind.CATEGORY)
    found = points(base, max_size, session.guard("functors"))
    report.say(f"points: {len(found)}")
    for cert in found:
        report.say("  " + " ".join(f"{a}:{cert.functor.size(a)}" for a in base.objects))
    report.data["points"] = len(found)
    if has_finite_limits(base):
        lex = lex_functors(base, max_size, session.guard("functors"))
        report.say(f"lex functors: {len(lex)}")
        report.data["lex"] = len(lex)
        if len(lex) != len(found):
            report.fail("flat and lex functors differ", (len(found), len(lex)))


@cli.command("classify-lex")
@click.argument("model")
@reporting
def classify_lex_command(session: Session, report: Report, model: str):
    """Geometric morphism classifying a finite-limit preserving model."""
    m = session.resolve(model, ArtifactKind.MODEL)
    try:
        result = classify_lex(m, guard=session.guard("maps"))
    except NotLexError as e:
        report.fail(f"model is not left exact ({e.probe})", e.witness)
        return
    report.say(f"morphism: {result.morphism.name}")
    for c, iso in round_trip_isomorphisms(result).items():
        report.say(f"  y({c}) (x) M ~ M({c}): {iso is not None}")
    report.certificate(result.certificate)


@cli.command("check-group")
@click.argument("group")
@reporting
def check_group_command(session: Session, report: Report, group: str):
    """Group object laws."""
    report.validation(check_group(session.resolve(group, ArtifactKind.GROUP)))


@cli.command("check-id")
@click.argument("group")
@click.argument("statement")
@click.option(
    "--method",
    type=click.Choice(["pointwise", "generalized", "both"]),
    default="both",
    show_default=True,
)
@reporting
def check_id_command(session: Session, report: Report, group: str, statement: str, method: str):
    """Check an equation, or an implication between equations, in a group object."""
    g = session.resolve(group, ArtifactKind.GROUP)
    parsed = parse_statement(statement)
    methods = list(IdentityMethod) if method == "both" else [IdentityMethod(method)]
    verdicts = [check_identity(parsed, g, m, session.guard("assignments")) for m in methods]
    for verdict in verdicts:
        report.say(str(verdict))
        report.data[verdict.method] = verdict.holds
    failing = next((v for v in verdicts if not v.holds), None)
    if failing is not None:
        report.fail(f"identity fails ({failing.method})", failing.witness)
    elif len({v.holds for v in verdicts}) > 1:
        report.fail("methods disagree")


@cli.command("check-field")
@click.argument("ring")
@click.option(
    "--variant",
    type=click.Choice(["cover", "negation", "both"]),
    default="both",
    show_default=True,
)
@reporting
def check_field_command(session: Session, report: Report, ring: str, variant: str):
    """Field axioms for a ring object."""
    r = session.resolve(ring, ArtifactKind.RING)
    checks = {FieldVariant.COVER: check_field, FieldVariant.NEGATION: check_field_variant}
    chosen = list(FieldVariant) if variant == "both" else [FieldVariant(variant)]
    for v in chosen:
        verdict = checks[v](r)
        report.say(str(verdict))
        report.data[v] = verdict.is_field
        if not verdict.is_field and report.ok:
            report.fail(f"not a field: {verdict.failed}", verdict.witness)


@cli.group("etcs")
def etcs_group():
    """Audits of the set-theoretic axioms on a finite corpus."""


@etcs_group.command("audit")
@click.argument("corpus")
@click.option(
    "--checks",
    default=",".join(Audit),
    show_default=True,
    help="Comma separated audits: " + ", ".join(Audit),
)
@reporting
def audit_command(session: Session, report: Report, corpus: str, checks: str):
    """Run the chosen audits on a corpus."""
    names = [c.strip() for c in checks.split(",") if c.strip()]
    unknown = [c for c in names if c not in set(Audit)]
    if unknown:
        raise InputError(f"unknown audit {unknown[0]} (choose from {', '.join(Audit)})")
    t = session.resolve(corpus, ArtifactKind.CORPUS)
    report.say(f"corpus: {t.name} ({len(t.presheaves)} objects) sha256:{t.hash()}")
    for cert in run_audits(t, names, guard=session.guard("audit candidates")):
        report.say(f"{cert.audit}: {cert.verdict} {cert.detail}".rstrip())
        report.data[cert.audit] = cert.verdict
        if not cert.ok and report.ok:
            report.fail(f"{cert.audit} {cert.verdict}", cert.witness)


@cli.command("laws")
@click.argument("category")
@click.option("--samples", type=int, default=200, show_default=True)
@reporting
def laws_command(session: Session, report: Report, category: str, samples: int):
    """Randomized checks: pullbacks of monos and epi-mono factorizations."""
    base = session.resolve(category, ArtifactKind.CATEGORY)
    rng = random.Random(session.seed)
    corpus = probe_corpus(base)
    guard = session.guard("maps")
    maps = [h for p in corpus for q in corpus for h in iter_maps(p, q, guard)]
    monos = [h for h in maps if is_mono(h)]
    one = terminal(base)
    global_elements = [h for h in maps if h.source == one]
    if not all(is_mono(h) for h in global_elements):
        culprit = next(h for h in global_elements if not is_mono(h))
        report.fail("a map out of 1 is not mono", culprit)
        return
    for n in range(samples):
        f = rng.choice(maps)
        m = rng.choice([m for m in monos if m.target == f.target])
        if not is_mono(pullback(m, f).legs["1"]):
            report.fail("pullback of a mono is not mono", (n, f, m))
            return
        factors = factor_epi_mono(f)
        if not (
            is_epi(factors.epi)
            and is_mono(factors.mono)
            and compose_maps(factors.mono, factors.epi).key() == f.key()
        ):
            report.fail("factorization is not epi then mono", (n, f))
            return
    report.say(f"samples: {samples} (seed {session.seed}, {len(maps)} maps, {len(monos)} monos)")
    report.say(f"maps out of 1: {len(global_elements)}, all mono")
    report.data["samples"] = samples


def main(argv: list[str] | None = None):
    cli.main(args=argv, prog_name="toposkit")


if __name__ == "__main__":
    main()
