#!/usr/bin/env python3
"""Regenerate the replay fixture corpora under fixtures/.

Outputs are deterministic: rerunning this script reproduces the checked-in
files byte for byte. Each composed sample output is verified against a
mirror of the engine's rubric/signal matcher before it is written, and the
per-task aggregates are asserted against the targets encoded below.

After regenerating fixtures/ablation/seed_bank.json, rebuild the bundle:

    ./build/cbl export --bank fixtures/ablation/seed_bank.json \
        --out fixtures/ablation/bundle.json --exported-at 0
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

# ---------------------------------------------------------------------------
# Mirrors of the engine's text primitives (fold/normalize/fnv1a64).

WHITESPACE = set(" \t\n\r\f\v")


def fold(s: str) -> str:
    out = []
    pending = False
    for ch in s:
        if ch in WHITESPACE:
            if out:
                pending = True
            continue
        if pending:
            out.append(" ")
            pending = False
        out.append(ch.lower())
    return "".join(out)


def normalize(s: str) -> str:
    out = fold(s)
    while out and out[-1] in ".,;:!? ":
        out = out[:-1]
    return out


def fnv1a64(s: str) -> int:
    h = 14695981039346656037
    for b in s.encode("utf-8"):
        h ^= b
        h = (h * 1099511628211) & 0xFFFFFFFFFFFFFFFF
    return h


def content_id(text: str) -> str:
    return format(fnv1a64(normalize(text)), "016x")


def skill_id(name: str, steps: list[str]) -> str:
    return content_id(name + "\n" + "\n".join(steps))


# ---------------------------------------------------------------------------
# Coverage sentences per task. Aux order mirrors the rubric order with the
# primary checkpoint removed. Every sentence is checked against the suite's
# keyword rules below, so an accidental cross-match fails loudly here rather
# than skewing a fixture.

SENTENCES = {
    "tool_orchestration": {
        "primary": "Define an explicit termination condition for every tool loop and terminate the workflow once the goal or the retry limit is reached.",
        "aux": [
            "Enforce a budget cap per task and halt new calls once the cost ceiling is reached.",
            "Run schema validation on every tool call and validate parameter formats before dispatch.",
            "Add loop recovery: detect repeated identical calls, break the repeated call cycle, and switch to an alternative tool.",
        ],
        "filler": "Latency spikes appear during retrieval-heavy phases of the run.",
    },
    "rlhf_training": {
        "primary": "Anchor the run on held-out preference accuracy and schedule a held-out evaluation after every reward refresh.",
        "aux": [
            "Watch for kl drift against the reference model and treat numerical instability such as loss spikes as a hard stop.",
            "Probe for reward hacking by comparing reward-model scores with human spot checks before trusting the gains.",
            "Keep a rollback plan: snapshot on schedule and roll back to the last stable checkpoint when a stability gate trips.",
        ],
        "filler": "Training throughput stayed flat across the affected steps.",
    },
    "enterprise_rag": {
        "primary": "Enforce access control before retrieval so the permission boundary filters candidate sources at query time.",
        "aux": [
            "Preserve citation consistency: pin source identifiers and versions so links survive cache refreshes.",
            "Require every claim to be grounded in retrieved evidence and add a grounding check before answers ship.",
            "Extend the audit chain across retrieval, caching, and generation so a complete audit log reconstructs each answer.",
        ],
        "filler": "Index freshness lags the document store by several hours.",
        "apt": "Avoid premature tuning of retrieval parameters; diagnose permissions and grounding first.",
    },
    "long_horizon_ops": {
        "primary": "After every mutating step, refresh the environment state and re-verify system state before continuing.",
        "aux": [
            "Set a checkpoint before each stage so recovery starts from a known-good snapshot.",
            "Gate the rollback on invariant checks: a failed postcondition triggers the rollback gate automatically.",
            "Replan after side effects: re-derive the plan from fresh observations instead of resuming the stale one.",
        ],
        "filler": "The incident timeline spans four environments and two shifts.",
    },
    "preference_drift": {
        "primary": "Test for judge drift first: compare current decisions against anchored verdicts to expose reviewer drift early.",
        "aux": [
            "Run a calibration audit against the frozen golden set and recalibrate the judge when agreement drops.",
            "Roll out through hierarchical gating where each staged release gate must pass before exposure widens.",
            "Track worst-group risk explicitly and block promotion on any key-group regression, not just mean movement.",
        ],
        "filler": "Label volume varies strongly by weekday across reviewer pools.",
    },
    "multiagent_discovery": {
        "primary": "Certify gains on an external benchmark: hold out an independent benchmark validation stage outside the platform.",
        "aux": [
            "Restore shared memory: a shared exploration ledger lets sub-agents see claimed hypotheses before spending.",
            "Apply a novelty constraint and reject candidates that score below the novelty threshold against the ledger.",
            "Suppress repeated exploration by clustering proposals and deduplicate hypothesis variants before funding.",
        ],
        "filler": "Compute usage concentrates in the first exploration wave.",
    },
}

TASK_ORDER = [
    "tool_orchestration",
    "rlhf_training",
    "enterprise_rag",
    "long_horizon_ops",
    "preference_drift",
    "multiagent_discovery",
]

# ---------------------------------------------------------------------------
# Score plans. Each row is (score, success); rows are shuffled onto the 15
# (round, variant) slots with a fixed seed per (file, task).

def rows(*groups):
    out = []
    for count, score, success in groups:
        out.extend([(score, success)] * count)
    assert len(out) == 15, out
    return out


PERFECT = rows((15, 4, True))

# Main-table plans: per method, per task. Sums and success counts encode the
# reported per-task aggregates; the best baseline per task carries the
# published values.
PAPER_PLANS = {
    "cbl": {task: PERFECT for task in TASK_ORDER},
    "checklist": {
        "tool_orchestration": rows((9, 4, True), (6, 3, True)),            # 3.600 / 1.000 (best)
        "rlhf_training": rows((12, 4, True), (3, 3, True)),                # 3.800 / 1.000 (best)
        "enterprise_rag": rows((7, 3, True), (5, 2, False), (2, 1, False), (1, 0, False)),
        "long_horizon_ops": rows((9, 3, True), (3, 2, False), (3, 0, False)),  # 2.200 / 0.600 (best)
        "preference_drift": rows((10, 3, True), (3, 2, False), (1, 1, False), (1, 0, False)),
        "multiagent_discovery": rows((3, 3, True), (4, 2, False), (1, 1, False), (7, 0, False)),
    },
    "rule-memory": {
        "tool_orchestration": rows((6, 4, True), (7, 3, True), (1, 2, False), (1, 1, False)),
        "rlhf_training": rows((8, 4, True), (6, 3, True), (1, 3, False)),
        "enterprise_rag": rows((8, 3, True), (5, 2, False), (1, 1, False), (1, 0, False)),  # 2.333 / 0.533 (best)
        "long_horizon_ops": rows((7, 3, True), (4, 2, False), (1, 1, False), (3, 0, False)),
        "preference_drift": rows((12, 3, True), (2, 2, False), (1, 0, False)),  # 2.667 / 0.800 (best)
        "multiagent_discovery": rows((3, 3, True), (3, 2, False), (2, 1, False), (7, 0, False)),
    },
    "few-shot": {
        "tool_orchestration": rows((3, 4, True), (9, 3, True), (3, 2, False)),
        "rlhf_training": rows((2, 4, True), (8, 3, True), (4, 2, False), (1, 1, False)),
        "enterprise_rag": rows((5, 3, True), (4, 2, False), (4, 1, False), (2, 0, False)),
        "long_horizon_ops": rows((5, 3, True), (4, 2, False), (2, 1, False), (4, 0, False)),
        "preference_drift": rows((7, 3, True), (4, 2, False), (1, 1, False), (3, 0, False)),
        "multiagent_discovery": rows((4, 3, True), (4, 2, False), (7, 0, False)),  # 1.333 / 0.267 (best)
    },
    "zero-shot": {
        "tool_orchestration": rows((1, 4, True), (7, 3, True), (4, 2, False), (3, 1, False)),
        "rlhf_training": rows((8, 3, True), (5, 2, False), (2, 1, False)),
        "enterprise_rag": rows((4, 3, True), (3, 2, False), (4, 1, False), (4, 0, False)),
        "long_horizon_ops": rows((3, 3, True), (3, 2, False), (3, 1, False), (6, 0, False)),
        "preference_drift": rows((4, 3, True), (4, 2, False), (3, 1, False), (4, 0, False)),
        "multiagent_discovery": rows((1, 3, True), (3, 2, False), (3, 1, False), (8, 0, False)),
    },
}

# Expected per-task aggregates, asserted after composition.
PAPER_TARGETS = {
    ("cbl", task): (60, 15) for task in TASK_ORDER
}
PAPER_TARGETS.update({
    ("checklist", "tool_orchestration"): (54, 15),
    ("checklist", "rlhf_training"): (57, 15),
    ("checklist", "enterprise_rag"): (33, 7),
    ("checklist", "long_horizon_ops"): (33, 9),
    ("checklist", "preference_drift"): (37, 10),
    ("checklist", "multiagent_discovery"): (18, 3),
    ("rule-memory", "tool_orchestration"): (48, 13),
    ("rule-memory", "rlhf_training"): (53, 14),
    ("rule-memory", "enterprise_rag"): (35, 8),
    ("rule-memory", "long_horizon_ops"): (30, 7),
    ("rule-memory", "preference_drift"): (40, 12),
    ("rule-memory", "multiagent_discovery"): (17, 3),
    ("few-shot", "tool_orchestration"): (45, 12),
    ("few-shot", "rlhf_training"): (41, 10),
    ("few-shot", "enterprise_rag"): (27, 5),
    ("few-shot", "long_horizon_ops"): (25, 5),
    ("few-shot", "preference_drift"): (30, 7),
    ("few-shot", "multiagent_discovery"): (20, 4),
    ("zero-shot", "tool_orchestration"): (36, 8),
    ("zero-shot", "rlhf_training"): (36, 8),
    ("zero-shot", "enterprise_rag"): (22, 4),
    ("zero-shot", "long_horizon_ops"): (18, 3),
    ("zero-shot", "preference_drift"): (23, 4),
    ("zero-shot", "multiagent_discovery"): (12, 1),
})

# Ablation plans over the two diagnostic tasks. rag_apt counts how many
# enterprise_rag samples carry the avoid-premature-tuning line.
ABLATION_PLANS = {
    "full": {
        "enterprise_rag": PERFECT,
        "tool_orchestration": PERFECT,
        "rag_apt": 15,
    },
    "drop-fact": {
        "enterprise_rag": rows((15, 3, True)),
        "tool_orchestration": rows((12, 3, True), (3, 3, False)),
        "rag_apt": 3,  # Fig-6D value 0.2 = 3/15
    },
    "drop-constraint": {
        "enterprise_rag": rows((4, 4, True), (11, 3, True)),
        "tool_orchestration": rows((5, 4, True), (7, 3, True), (3, 3, False)),
        "rag_apt": 15,
    },
    "drop-skill": {
        "enterprise_rag": rows((5, 4, True), (10, 3, True)),
        "tool_orchestration": rows((7, 4, True), (6, 3, True), (2, 3, False)),
        "rag_apt": 15,
    },
    "drop-curriculum": {
        "enterprise_rag": rows((3, 4, True), (12, 3, True)),
        "tool_orchestration": rows((3, 4, True), (9, 3, True), (3, 3, False)),
        "rag_apt": 15,
    },
    "rule-memory": {
        "enterprise_rag": rows((1, 4, True), (11, 3, True), (3, 2, False)),
        "tool_orchestration": rows((2, 4, True), (10, 3, True), (3, 2, False)),
        "rag_apt": 15,
    },
}

# (pooled score sum over 30, pooled successes, termination firings, apt firings)
ABLATION_TARGETS = {
    "full": (120, 30, 15, 15),
    "drop-fact": (90, 27, 12, 3),
    "drop-constraint": (99, 27, 12, 15),
    "drop-skill": (102, 28, 13, 15),
    "drop-curriculum": (96, 27, 12, 15),
    "rule-memory": (87, 24, 12, 15),
}

# Latency/token bases per fixture file. CBL's totals are pinned to the
# reported global means: 90 * 25507.6 ms and 90 * 129049.9 tokens.
PAPER_COST = {
    "cbl": (25507, 400, 129049, 2500, 2295684, 11614491),
    "zero-shot": (11800, 900, 52000, 4000, None, None),
    "few-shot": (14600, 900, 83000, 4500, None, None),
    "checklist": (13900, 900, 76000, 4500, None, None),
    "rule-memory": (15200, 900, 88000, 4500, None, None),
}
ABLATION_COST = {
    "full": (24800, 700, 118000, 5000),
    "drop-fact": (23900, 700, 109000, 5000),
    "drop-constraint": (24300, 700, 112000, 5000),
    "drop-skill": (24100, 700, 111000, 5000),
    "drop-curriculum": (24500, 700, 113000, 5000),
    "rule-memory": (15650, 700, 90000, 5000),
}


def load_suite():
    with open(FIXTURES / "suite.json", encoding="utf-8") as fh:
        return json.load(fh)


def rule_matches(rule, folded_text):
    assert rule["type"] == "keyword_any", "generator only mirrors keyword rules"
    return any(fold(kw) in folded_text for kw in rule["keywords"])


def evaluate(task_cfg, text):
    folded_text = fold(text)
    satisfied = [cp["id"] for cp in task_cfg["rubric"] if rule_matches(cp["pattern"], folded_text)]
    fired = [sig["id"] for sig in task_cfg.get("signals", []) if rule_matches(sig["pattern"], folded_text)]
    return satisfied, fired


def compose_output(task_id, task_cfg, sample_id, score, success, apt_on):
    bank = SENTENCES[task_id]
    lines = [f"Assessment for {sample_id}: structured diagnosis and repair plan."]
    if success:
        assert score >= 3
        lines.append(bank["primary"])
        lines.extend(bank["aux"][: score - 1])
    else:
        assert score <= 3
        lines.extend(bank["aux"][:score])
    if apt_on and task_id == "enterprise_rag":
        lines.append(bank["apt"])
    lines.append(bank["filler"])
    text = "\n".join(lines)

    primary_id = next(cp["id"] for cp in task_cfg["rubric"] if cp.get("primary"))
    satisfied, fired = evaluate(task_cfg, text)
    assert len(satisfied) == score, (sample_id, score, satisfied)
    assert (primary_id in satisfied) == success, (sample_id, success, satisfied)
    return text, fired


def sample_ids(task_id):
    return [f"{task_id}/r{r}v{v}" for r in (1, 2, 3) for v in (1, 2, 3, 4, 5)]


def build_file(tag, plans, cost, apt_counts, tasks_cfg, task_list):
    base_ms, jit_ms, base_tok, jit_tok = cost[:4]
    target_ms = cost[4] if len(cost) > 4 else None
    target_tok = cost[5] if len(cost) > 5 else None

    all_ids = []
    samples = {}
    stats = {}
    for task_id in task_list:
        task_cfg = tasks_cfg[task_id]
        plan = list(plans[task_id])
        rng = random.Random(f"cbl-fixtures:{tag}:{task_id}:v1")
        rng.shuffle(plan)

        apt_target = apt_counts.get(task_id)
        apt_slots = set()
        if task_id == "enterprise_rag" and apt_target is not None:
            slots = list(range(15))
            rng.shuffle(slots)
            apt_slots = set(slots[:apt_target])

        score_sum = succ = 0
        fired_counts = {}
        for idx, sid in enumerate(sample_ids(task_id)):
            score, success = plan[idx]
            if task_id == "enterprise_rag":
                apt_on = idx in apt_slots if apt_target is not None else success
            else:
                apt_on = False
            text, fired = compose_output(task_id, task_cfg, sid, score, success, apt_on)
            samples[sid] = {"text": text}
            all_ids.append(sid)
            score_sum += score
            succ += success
            for f in fired:
                fired_counts[f] = fired_counts.get(f, 0) + 1
        stats[task_id] = (score_sum, succ, fired_counts)

    rng_cost = random.Random(f"cbl-fixtures:{tag}:cost:v1")
    latencies = [base_ms + rng_cost.randint(-jit_ms, jit_ms) for _ in all_ids]
    tokens = [base_tok + rng_cost.randint(-jit_tok, jit_tok) for _ in all_ids]
    if target_ms is not None:
        latencies[-1] = target_ms - sum(latencies[:-1])
        assert 0 < latencies[-1] < 60000, latencies[-1]
    if target_tok is not None:
        tokens[-1] = target_tok - sum(tokens[:-1])
        assert tokens[-1] > 0
    for sid, ms, tok in zip(all_ids, latencies, tokens):
        tokens_in = (tok * 11) // 20
        samples[sid].update(
            {"tokens_in": tokens_in, "tokens_out": tok - tokens_in, "latency_ms": ms}
        )

    return {"schema_version": 1, "samples": samples}, stats


def write_json(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def make_paper_fixtures(suite):
    tasks_cfg = {t["category_id"]: t for t in suite["tasks"]}
    for method, plans in PAPER_PLANS.items():
        apt_counts = {"enterprise_rag": 15} if method == "cbl" else {}
        doc, stats = build_file(f"paper:{method}", plans, PAPER_COST[method], apt_counts,
                                tasks_cfg, TASK_ORDER)
        for task_id, (score_sum, succ, fired) in stats.items():
            want = PAPER_TARGETS[(method, task_id)]
            assert (score_sum, succ) == want, (method, task_id, score_sum, succ, want)
            if method == "cbl":
                for sig in tasks_cfg[task_id].get("signals", []):
                    assert fired.get(sig["id"], 0) == 15, (method, task_id, sig["id"], fired)
        if method == "cbl":
            ms = sum(s["latency_ms"] for s in doc["samples"].values())
            tok = sum(s["tokens_in"] + s["tokens_out"] for s in doc["samples"].values())
            assert ms == 2295684 and tok == 11614491, (ms, tok)
        write_json(FIXTURES / "paper" / f"{method}.json", doc)
        print(f"paper/{method}.json: {len(doc['samples'])} samples")


def make_ablation_fixtures(suite):
    tasks_cfg = {t["category_id"]: t for t in suite["tasks"]}
    diag = ["enterprise_rag", "tool_orchestration"]
    for condition, plans in ABLATION_PLANS.items():
        apt_counts = {"enterprise_rag": plans["rag_apt"]}
        doc, stats = build_file(f"ablation:{condition}",
                                {k: v for k, v in plans.items() if k != "rag_apt"},
                                ABLATION_COST[condition], apt_counts, tasks_cfg, diag)
        score_sum = sum(s[0] for s in stats.values())
        succ = sum(s[1] for s in stats.values())
        termination = stats["tool_orchestration"][2].get("termination", 0)
        apt = stats["enterprise_rag"][2].get("avoid_premature_tuning", 0)
        want = ABLATION_TARGETS[condition]
        assert (score_sum, succ, termination, apt) == want, (condition, score_sum, succ,
                                                             termination, apt, want)
        write_json(FIXTURES / "ablation" / f"{condition}.json", doc)
        print(f"ablation/{condition}.json: {len(doc['samples'])} samples "
              f"(sum={score_sum}, succ={succ}, termination={termination}, apt={apt})")


# ---------------------------------------------------------------------------
# Seed bank for the transfer bundle.

FACTS = [
    ("Every tool exposes a JSON parameter schema; calls failing schema checks are rejected by the dispatcher.",
     ["tool_orchestration", "schema", "tools"]),
    ("Tool spend is metered per call and counted against a per-task budget configured at launch.",
     ["tool_orchestration", "budget", "tools"]),
    ("PPO fine-tuning tracks reward, KL to the reference model, and gradient norms per step.",
     ["rlhf_training", "rlhf", "training"]),
    ("Held-out preference sets are refreshed quarterly and versioned separately from training data.",
     ["rlhf_training", "reward", "alignment"]),
    ("Source connectors carry per-document access labels that must be honored end to end.",
     ["enterprise_rag", "permissions", "rag"]),
    ("Citations reference immutable source ids plus version stamps, not display titles.",
     ["enterprise_rag", "citations", "rag"]),
    ("Browser, repository, and database actions are side-effecting and cannot be assumed idempotent.",
     ["long_horizon_ops", "side_effects", "operations"]),
    ("Deployment stages publish state snapshots that operators can diff before proceeding.",
     ["long_horizon_ops", "checkpoints", "state"]),
    ("Judge models are versioned; every release records agreement with the senior reviewer pool.",
     ["preference_drift", "calibration", "drift"]),
    ("Release exposure widens in fixed stages, each with its own promotion criteria.",
     ["preference_drift", "gating", "governance"]),
    ("The exploration ledger records every hypothesis, its owner, and its evaluation outcome.",
     ["multiagent_discovery", "coordination", "novelty"]),
    ("External benchmark suites run outside the platform and cannot be influenced by sub-agents.",
     ["multiagent_discovery", "benchmarks", "discovery"]),
]

SEED_CONSTRAINTS = [
    ("Stop the workflow when the same tool call repeats without new information.",
     ["tool_orchestration", "loops"]),
    ("Never trust reward movement without a matching held-out preference check.",
     ["rlhf_training", "reward"]),
    ("Run access checks before retrieval, never after generation.",
     ["enterprise_rag", "permissions"]),
    ("Re-read system state after every side-effecting action before planning the next step.",
     ["long_horizon_ops", "state"]),
    ("Gate releases on group-level metrics, not the aggregate mean.",
     ["preference_drift", "gating"]),
    ("Reject discovery claims that lack external benchmark confirmation.",
     ["multiagent_discovery", "benchmarks"]),
]


def seed_skills(suite):
    out = []
    counts = {"validate-before-emit": 3, "checkpoint-rollback-gate": 2, "stable-citation-chain": 2}
    for task in suite["tasks"]:
        for cp in task["rubric"]:
            name = cp.get("skill_name")
            if not name:
                continue
            steps = cp["skill_steps"]
            out.append({
                "id": skill_id(name, steps),
                "name": name,
                "steps": steps,
                "applicability_tags": [task["category_id"]],
                "validation_count": counts[name],
            })
    return out


def make_seed_bank(suite):
    bank = {
        "schema_version": 1,
        "agent_id": "mentor",
        "facts": [
            {
                "id": content_id(text),
                "text": text,
                "tags": sorted(set(tags)),
                "source_case": "seed",
                "created_at": i,
            }
            for i, (text, tags) in enumerate(FACTS)
        ],
        "constraints": [
            {
                "id": content_id(text),
                "text": text,
                "trigger_failure": None,
                "tags": sorted(set(tags)),
                "source_case": "seed",
                "created_at": i,
            }
            for i, (text, tags) in enumerate(SEED_CONSTRAINTS)
        ],
        "skills": seed_skills(suite),
        "cases": [
            {
                "case_id": f"mentor/{task_id}/001",
                "task_category": task_id,
                "summary": f"{task_id} sample mentor/{task_id}/001: score 4/4, succeeded",
                "difficulty": round(0.12 + 0.04 * i, 2),
                "success": True,
                "score": 4,
                "duration_ms": 18000 + 1500 * i,
                "failure_kinds": [],
                "created_at": i,
            }
            for i, task_id in enumerate(TASK_ORDER)
        ],
    }
    write_json(FIXTURES / "ablation" / "seed_bank.json", bank)
    print(f"ablation/seed_bank.json: {len(bank['facts'])} facts, "
          f"{len(bank['constraints'])} constraints, {len(bank['skills'])} skills, "
          f"{len(bank['cases'])} cases")


def main():
    suite = load_suite()
    make_paper_fixtures(suite)
    make_ablation_fixtures(suite)
    make_seed_bank(suite)


if __name__ == "__main__":
    main()
