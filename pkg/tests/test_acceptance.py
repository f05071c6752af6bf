"""End-to-end acceptance gate.

Each test here covers one release criterion and is written against an
independent oracle: scores and orderings are recomputed from scratch with
plain Counters and explicit sorts, never by calling the code under test a
second way.  Budgets are asserted with wall-clock measurements, so keep
these tests free of incidental I/O.
"""
from __future__ import annotations

import base64
import io
import math
import random
import socket
import statistics
import threading
import time
from pathlib import Path

import pytest
from PIL import Image

from medrouter.backends import ImageRef, RemoteBackend, StubBackend, StubConfig
from medrouter.engine import CycleDetected, TaskStatus, execute, topo_order
from medrouter.evalharness import default_corpus, run_eval
from medrouter.lexicon import SynonymLexicon, default_lexicon
from medrouter.normalize import Stage, normalize_term
from medrouter.offline import offline_parse
from medrouter.plan import ConditionKind, ConditionPredicate, Plan, TaskSpec
from medrouter.registry import Intent, ParsedName, format_weight_name, parse_weight_name
from medrouter.routing import (
    REASON_BELOW_THRESHOLD,
    REASON_INTENT_FILTERED,
    REASON_NO_CANDIDATES,
    RouteQuery,
    RoutingParams,
    select_weight,
)
from medrouter.resolve import resolve_plan
from medrouter.text import canonicalize_text, cosine, embed

from helpers import (
    TABLE1_STEMS,
    checkerboard,
    make_image,
    reference_cosine,
    reference_score,
    registry_from_stems,
)

PNEUMONIA_QUERY = "Check this chest x-ray for pneumonia. If confirmed, segment the lungs."


def test_scoring_bounds_and_strict_threshold():
    """Exact triple match scores 3.5; no modality scores 2.5; 1.6 is rejected."""
    started = time.perf_counter()
    params = RoutingParams()

    registry = registry_from_stems(("Cls_TB_CXR",))
    full = select_weight(RouteQuery(Intent.CLASSIFICATION, "tb", "cxr"), registry, params)
    assert full.selected == "Cls_TB_CXR"
    assert full.score is not None and full.score.total == 3.5

    bare = select_weight(RouteQuery(Intent.CLASSIFICATION, "tb", None), registry, params)
    assert bare.selected == "Cls_TB_CXR"
    assert bare.score is not None and bare.score.total == 2.5

    # cosine("abcde", "abqde") shares exactly the sentinel trigrams: 2 of 5
    # each side, so sim = 2/5 and S = 1 + 1.5 * 0.4 lands on the threshold.
    boundary = registry_from_stems(("Cls_Abqde_CXR",))
    at_threshold = select_weight(
        RouteQuery(Intent.CLASSIFICATION, "abcde", None), boundary, params
    )
    assert at_threshold.selected is None
    assert at_threshold.reason_if_none == REASON_BELOW_THRESHOLD
    assert at_threshold.ranked[0].breakdown.total == 1.6

    assert time.perf_counter() - started < 1.0


def _random_stem(rng: random.Random, targets: list[str], modalities: list[str]) -> str:
    intent = rng.choice(("Cls", "Classification", "Seg", "Segmentation"))
    if intent in ("Seg", "Segmentation"):
        body = rng.choice(targets)
    else:
        body = "-".join(rng.sample(targets, k=rng.randint(1, 3)))
    return f"{intent}_{body.title()}_{rng.choice(modalities)}"


def _oracle_route(query: RouteQuery, registry, params: RoutingParams):
    """Brute-force selection: rescore every record and re-sort from scratch."""
    if not registry.records:
        return None, REASON_NO_CANDIDATES
    rows = []
    for record in registry:
        if record.intent is not query.intent:
            continue
        sim_target = reference_cosine(query.target, record.joined_target)
        sim_modality = (
            reference_cosine(query.modality, record.norm_modality)
            if query.modality is not None
            else None
        )
        score = reference_score(1, sim_target, sim_modality, params.alpha, params.beta)
        rows.append((score, record.class_count, record.weight_id))
    if not rows:
        return None, REASON_INTENT_FILTERED
    rows.sort(key=lambda row: (-row[0], row[1], row[2]))
    best_score, _, best_id = rows[0]
    if best_score > params.threshold:
        return best_id, None
    return None, REASON_BELOW_THRESHOLD


def test_routing_agrees_with_brute_force_oracle():
    """200 random registries, 5 tasks each: winner and reason match exactly."""
    rng = random.Random(0xC0FFEE)
    params = RoutingParams()
    target_pool = [
        "tb", "covid", "pneumonia", "lung", "heart", "nodule", "effusion",
        "edema", "polyp", "cup", "disc", "vessel", "fracture", "mass",
    ] + ["".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(rng.randint(2, 9))) for _ in range(20)]
    modality_pool = ["cxr", "chest x-ray", "ct", "mri", "fundus", "endoscopy", "ultrasound"]

    started = time.perf_counter()
    checked = 0
    for case in range(200):
        count = rng.randint(0, 50) if case % 10 else 0
        stems = list({_random_stem(rng, target_pool, modality_pool) for _ in range(count)})
        registry = registry_from_stems(stems)

        for _ in range(5):
            target = rng.choice(target_pool)
            modality = rng.choice([None] + modality_pool)
            query = RouteQuery(
                rng.choice((Intent.CLASSIFICATION, Intent.SEGMENTATION)),
                canonicalize_text(target),
                canonicalize_text(modality) if modality else None,
            )
            decision = select_weight(query, registry, params)
            expected_id, expected_reason = _oracle_route(query, registry, params)
            assert decision.selected == expected_id, (stems, query)
            assert decision.reason_if_none == expected_reason, (stems, query)
            checked += 1

    assert checked == 1000
    assert time.perf_counter() - started < 10.0


def test_binary_weight_preferred_over_multiclass():
    registry = registry_from_stems(("Cls_Covid_CXR", "Cls_Covid-Pneumonia_CXR"))
    decision = select_weight(
        RouteQuery(Intent.CLASSIFICATION, "covid", "cxr"), registry, RoutingParams()
    )
    assert decision.selected == "Cls_Covid_CXR"
    runner_up = decision.ranked[1]
    assert runner_up.weight_id == "Cls_Covid-Pneumonia_CXR"
    assert runner_up.breakdown.sim_target < 1.0


def test_documented_stems_parse_and_names_round_trip():
    expected = {
        "Seg_Lung_Chest X-ray": (Intent.SEGMENTATION, ("lung",), "chest x-ray"),
        "Segmentation_Lung_CXR": (Intent.SEGMENTATION, ("lung",), "cxr"),
        "Cls_TB_Chest X-ray": (Intent.CLASSIFICATION, ("tb",), "chest x-ray"),
        "Classification_Tuberculosis_CXR": (Intent.CLASSIFICATION, ("tuberculosis",), "cxr"),
        "Cls_Covid-Pneumonia_CXR": (Intent.CLASSIFICATION, ("covid", "pneumonia"), "cxr"),
    }
    assert set(expected) == set(TABLE1_STEMS)
    for stem, (intent, targets, modality) in expected.items():
        parsed = parse_weight_name(stem)
        assert (parsed.intent, parsed.raw_targets, parsed.raw_modality) == (
            intent,
            targets,
            modality,
        )

    rng = random.Random(500)

    def token(allow_space: bool = False) -> str:
        parts = [
            "".join(rng.choice("abcdefghijklmnopqrstuvwxyz0123456789") for _ in range(rng.randint(1, 6)))
            for _ in range(rng.randint(1, 3))
        ]
        joiner = rng.choice((" ", "-")) if allow_space else "-"
        return joiner.join(parts)

    for _ in range(500):
        intent = rng.choice((Intent.CLASSIFICATION, Intent.SEGMENTATION))
        if intent is Intent.SEGMENTATION:
            targets = (token(),)
        else:
            # Hyphens separate classification targets, so none inside tokens.
            targets = tuple(token().replace("-", "") for _ in range(rng.randint(1, 4)))
        parsed = ParsedName(intent=intent, raw_targets=targets, raw_modality=token(allow_space=True))
        stem = format_weight_name(parsed)
        assert parse_weight_name(stem) == parsed
        assert format_weight_name(parse_weight_name(stem)) == stem


def test_conditional_executes_both_branches_and_cascades(tmp_path, images):
    registry = registry_from_stems(
        ("Cls_Pneumonia_CXR", "Classification_Tuberculosis_CXR", "Segmentation_Lung_CXR"),
        lexicon=default_lexicon(),
    )
    lexicon = default_lexicon()
    plan = offline_parse(PNEUMONIA_QUERY, registry.vocab, lexicon)
    resolved = resolve_plan(plan, registry, lexicon)
    image = ImageRef.open(images["white"])

    positive = execute(
        resolved,
        StubBackend(StubConfig(forced_outcome="pneumonia"), output_dir=tmp_path / "pos"),
        image,
    )
    assert positive.result("t1").status is TaskStatus.DONE
    assert positive.result("t2").status is TaskStatus.DONE
    assert (tmp_path / "pos" / "t2_Segmentation_Lung_CXR_mask.png").exists()

    negative = execute(
        resolved,
        StubBackend(StubConfig(forced_outcome="negative"), output_dir=tmp_path / "neg"),
        image,
    )
    assert negative.result("t1").status is TaskStatus.DONE
    assert negative.result("t2").status is TaskStatus.SKIPPED_CONDITION

    chain = Plan(
        query="chain",
        tasks=(
            TaskSpec("t1", Intent.CLASSIFICATION, "pneumonia", "cxr"),
            TaskSpec(
                "t2",
                Intent.SEGMENTATION,
                "lung",
                "cxr",
                depends_on=("t1",),
                condition=ConditionPredicate("t1", ConditionKind.OUTCOME_POSITIVE),
            ),
            TaskSpec("t3", Intent.CLASSIFICATION, "tb", "cxr", depends_on=("t2",)),
        ),
    )
    report = execute(
        resolve_plan(chain, registry, lexicon),
        StubBackend(StubConfig(forced_outcome="negative"), output_dir=tmp_path / "chain"),
        image,
    )
    assert report.result("t2").status is TaskStatus.SKIPPED_CONDITION
    cascaded = report.result("t3")
    assert cascaded.status is TaskStatus.SKIPPED_DEPENDENCY
    assert "t2" in (cascaded.error or "")


def _random_dag(rng: random.Random) -> Plan:
    size = rng.randint(1, 12)
    ids = [f"t{i}" for i in range(1, size + 1)]
    shuffled = ids[:]
    rng.shuffle(shuffled)
    position = {tid: i for i, tid in enumerate(shuffled)}
    tasks = []
    for tid in ids:
        earlier = [other for other in ids if position[other] < position[tid]]
        deps = tuple(rng.sample(earlier, k=rng.randint(0, min(3, len(earlier))))) if earlier else ()
        tasks.append(TaskSpec(tid, Intent.CLASSIFICATION, "tb", depends_on=deps))
    return Plan(query="generated", tasks=tuple(tasks))


def test_orderings_respect_all_edges_and_cycles_are_rejected():
    rng = random.Random(1000)
    started = time.perf_counter()
    for _ in range(1000):
        plan = _random_dag(rng)
        order = topo_order(plan)
        index = {tid: i for i, tid in enumerate(order)}
        assert sorted(order) == sorted(t.task_id for t in plan.tasks)
        for task in plan.tasks:
            for dep in task.depends_on:
                assert index[dep] < index[task.task_id], (order, task)

        # Reverse one edge (or fabricate a 2-cycle) and expect rejection.
        tasks = list(plan.tasks)
        edges = [(dep, t.task_id) for t in tasks for dep in t.depends_on]
        if edges:
            dep, owner = rng.choice(edges)
            closing = next(i for i, t in enumerate(tasks) if t.task_id == dep)
            tasks[closing] = TaskSpec(
                dep,
                Intent.CLASSIFICATION,
                "tb",
                depends_on=tasks[closing].depends_on + (owner,),
            )
        elif len(tasks) >= 2:
            a, b = tasks[0].task_id, tasks[1].task_id
            tasks[0] = TaskSpec(a, Intent.CLASSIFICATION, "tb", depends_on=(b,))
            tasks[1] = TaskSpec(b, Intent.CLASSIFICATION, "tb", depends_on=(a,))
        else:
            continue
        with pytest.raises(CycleDetected):
            topo_order(Plan(query="cyclic", tasks=tuple(tasks)))
    assert time.perf_counter() - started < 10.0


def test_bundled_corpus_scores_100_percent_offline(tmp_path, demo):
    registry, lexicon = demo
    report = run_eval(default_corpus(), registry, lexicon, output_dir=tmp_path)
    simple, complex_, overall = report.rows

    for row in (simple, complex_, overall):
        for tally in (row.intention, row.target, row.weight, row.condition, row.dependency):
            assert tally.correct == tally.total
    for tally in (overall.intention, overall.target, overall.weight):
        assert tally.total >= 30
    assert overall.condition.total > 0
    assert overall.dependency.total > 0
    assert overall.overall.percent == 100.0

    lines = report.table_text().splitlines()
    header = lines[0].split()
    for column in ("Class", "Intention", "Target", "Weight", "Condition", "Dependency", "Overall"):
        assert column in header
    assert "Avg Time (s)" in lines[0]
    assert set(lines[1]) <= {"-", " "}
    assert [row.split()[0] for row in lines[2:5]] == ["Simple", "Complex", "Overall"]


def test_plan_and_resolve_latency_budget():
    rng = random.Random(99)
    filler = list(
        {
            _random_stem(
                rng,
                ["nodule", "effusion", "edema", "polyp", "vessel", "cup", "disc", "mass"],
                ["ct", "mri", "fundus", "ultrasound"],
            )
            for _ in range(300)
        }
    )[:98]
    lexicon = default_lexicon()
    registry = registry_from_stems(
        tuple(filler) + ("Cls_Pneumonia_CXR", "Segmentation_Lung_CXR"), lexicon=lexicon
    )
    assert len(registry.records) == 100

    durations = []
    for _ in range(31):
        started = time.perf_counter()
        plan = offline_parse(PNEUMONIA_QUERY, registry.vocab, lexicon)
        resolved = resolve_plan(plan, registry, lexicon)
        durations.append(time.perf_counter() - started)
    assert all(task.weight is not None for task in resolved.tasks)
    assert statistics.median(durations) < 0.050


def test_normalization_stages_and_trigram_identity(demo):
    lexicon = default_lexicon()
    registry = registry_from_stems(TABLE1_STEMS, lexicon=lexicon)
    result = normalize_term("tuberculosis", registry.vocab.targets, lexicon)
    assert result.canonical == "tb"
    assert result.stage is Stage.LEXICON

    demo_registry, demo_lexicon = demo
    vocabulary = set(demo_registry.vocab.targets) | set(demo_registry.vocab.modalities)
    for term in sorted(vocabulary):
        once = normalize_term(term, vocabulary, demo_lexicon)
        assert once.stage is Stage.EXACT
        twice = normalize_term(once.canonical, vocabulary, demo_lexicon)
        assert twice == once
        assert canonicalize_text(canonicalize_text(term)) == canonicalize_text(term)

    assert cosine(embed("abc"), embed("abd")) == 1 / 3


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def adapter_endpoint(tmp_path_factory):
    """A live adapter process hosting stub-parity models for three weights."""
    medadapter = pytest.importorskip("medadapter")
    uvicorn = pytest.importorskip("uvicorn")

    manifest = tmp_path_factory.mktemp("manifest") / "models.json"
    manifest.write_text(
        """
        {"models": [
            {"weight_id": "Cls_Pneumonia_CXR", "mode": 0, "class_count": 2,
             "loader": {"kind": "stub"}},
            {"weight_id": "Cls_Covid-Pneumonia_CXR", "mode": 0, "class_count": 2,
             "loader": {"kind": "stub"}},
            {"weight_id": "Segmentation_Lung_CXR", "mode": 1, "class_count": 2,
             "loader": {"kind": "stub"}}
        ]}
        """
    )
    app = medadapter.build_app(medadapter.load_manifest(manifest))
    port = _free_port()
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("adapter server did not start")
        time.sleep(0.02)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


def _parity_fixtures(root: Path) -> dict[str, Path]:
    root.mkdir(parents=True, exist_ok=True)
    out = {}
    for name, value in (("white", 255), ("black", 0), ("gray", 128)):
        path = root / f"{name}.png"
        Image.new("L", (256, 256), color=value).save(path)
        out[name] = path
    board = Image.new("L", (256, 256))
    board.putdata([255 if (x + y) % 2 == 0 else 0 for y in range(256) for x in range(256)])
    board.save(root / "board.png")
    out["board"] = root / "board.png"
    ramp = Image.new("L", (256, 256))
    ramp.putdata([x for _ in range(256) for x in range(256)])
    ramp.save(root / "ramp.png")
    out["ramp"] = root / "ramp.png"
    return out


def _strip_volatile(doc: dict) -> dict:
    doc = dict(doc)
    doc.pop("total_duration_s", None)
    doc["tasks"] = [dict(task) for task in doc["tasks"]]
    for task in doc["tasks"]:
        task.pop("duration_s", None)
        if isinstance(task.get("output"), dict):
            task["output"] = {
                key: value for key, value in task["output"].items() if key != "mask_path"
            }
    return doc


def _assert_probabilities_close(a: dict, b: dict, tolerance: float = 1e-6) -> None:
    for left, right in zip(a["tasks"], b["tasks"]):
        out_left, out_right = left.get("output"), right.get("output")
        if isinstance(out_left, dict) and "probabilities" in out_left:
            pl, pr = out_left.pop("probabilities"), out_right.pop("probabilities")
            assert len(pl) == len(pr)
            assert all(abs(x - y) <= tolerance for x, y in zip(pl, pr)), (pl, pr)


def test_adapter_matches_builtin_stub_and_preprocess_shape(adapter_endpoint, tmp_path):
    medadapter = pytest.importorskip("medadapter")

    registry = registry_from_stems(
        ("Cls_Pneumonia_CXR", "Cls_Covid-Pneumonia_CXR", "Segmentation_Lung_CXR"),
        lexicon=default_lexicon(),
    )
    lexicon = default_lexicon()
    fixtures = _parity_fixtures(tmp_path / "fixtures")
    plan = offline_parse(PNEUMONIA_QUERY, registry.vocab, lexicon)
    resolved = resolve_plan(plan, registry, lexicon)

    for name, path in sorted(fixtures.items()):
        image = ImageRef.open(path)
        stub_report = execute(
            resolved, StubBackend(output_dir=tmp_path / "stub" / name), image
        )
        remote_report = execute(
            resolved,
            RemoteBackend(adapter_endpoint, output_dir=tmp_path / "remote" / name),
            image,
        )
        stub_doc = _strip_volatile(stub_report.to_json_dict())
        remote_doc = _strip_volatile(remote_report.to_json_dict())
        _assert_probabilities_close(stub_doc, remote_doc)
        assert stub_doc == remote_doc, name

        for result in stub_report.results:
            if result.status is TaskStatus.DONE and hasattr(result.output, "mask_ref"):
                stub_mask = Image.open(result.output.mask_ref)
                remote_mask = Image.open(
                    remote_report.result(result.task_id).output.mask_ref
                )
                assert stub_mask.size == remote_mask.size == (256, 256)
                assert list(stub_mask.getdata()) == list(remote_mask.getdata()), name

    # Per-weight parity on the classification weight the plan does not route.
    multi = registry.get("Cls_Covid-Pneumonia_CXR")
    assert multi is not None
    stub_backend = StubBackend(output_dir=tmp_path / "direct")
    remote_backend = RemoteBackend(adapter_endpoint, output_dir=tmp_path / "direct")
    for name, path in sorted(fixtures.items()):
        image = ImageRef.open(path)
        ours = stub_backend.classify(image, multi)
        theirs = remote_backend.classify(image, multi)
        assert ours.predicted_label == theirs.predicted_label, name
        assert all(
            abs(x - y) <= 1e-6 for x, y in zip(ours.probabilities, theirs.probabilities)
        ), name

    for width, height in ((512, 512), (64, 200), (256, 256), (31, 17)):
        buffer = io.BytesIO()
        Image.new("L", (width, height), color=90).save(buffer, format="PNG")
        tensor = medadapter.preprocess_bytes(buffer.getvalue())
        assert tensor.shape[:2] == (256, 256)
        assert tensor.shape[2] == 3
