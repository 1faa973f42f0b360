from __future__ import annotations

import json
import pathlib

import pytest

from riprover.commands import execute, handle_request, run_script, state_payload
from riprover.parser import parse_system
from riprover.session import ProofSession

SYSTEMS = pathlib.Path(__file__).resolve().parent.parent / "systems"


def make_session(system_name: str, **kwargs) -> ProofSession:
    sf = parse_system((SYSTEMS / system_name).read_text())
    return ProofSession(sf.system, sf.goals, **kwargs)


def script_text(name: str) -> str:
    return (SYSTEMS / name).read_text()


def test_recdown_tailup_script_reaches_qed():
    session = make_session("recdown_tailup.lcstrs")
    result = run_script(session, script_text("recdown_tailup.script"))
    assert result.ok, result.output
    assert session.state.is_qed()
    assert session.state.ledger.all_green()
    # exactly one requirement was accumulated, discharged by the oracle
    assert len(session.state.ledger.items) == 1
    assert session.state.ledger.items[0].status == "proved"
    assert session.qed_clean
    session.smt.close()


def test_script_replay_deterministic():
    transcripts = []
    for _ in range(2):
        session = make_session("recdown_tailup.lcstrs")
        result = run_script(session, script_text("recdown_tailup.script"))
        assert result.ok, result.output
        transcripts.append("\n".join(session.transcript))
        session.smt.close()
    assert transcripts[0] == transcripts[1]


def test_rev_app_script_reaches_qed():
    session = make_session("rev_app.lcstrs")
    result = run_script(session, script_text("rev_app.script"))
    assert result.ok, result.output
    assert session.state.is_qed()
    assert session.state.ledger.all_green(), session.state.ledger.summary()
    session.smt.close()


def test_gh_disprove_script():
    session = make_session("gh.lcstrs", trusts={"ground-confluence"})
    result = run_script(session, script_text("gh_disprove.script"))
    assert result.ok, result.output
    assert session.refutation is not None
    model = {v.name: t for v, t in session.refutation.model.items()}
    assert "x" in model  # the witness model is printed with x instantiated
    session.smt.close()


def test_gh_disprove_requires_completeness_tracking():
    session = make_session("gh.lcstrs", trusts={"ground-confluence"})
    # postulating first makes the state incomplete: disprove must refuse
    result = execute(session, "postulate G f 0 x == x")
    assert result.ok
    result = execute(session, "case 1 [k < 0 /\\ n > 0] | [k >= 0] | [n <= 0]")
    assert result.ok
    result = execute(session, "disprove 3")
    assert not result.ok and result.error_code in ("state-not-complete", "not-contradictory")
    session.smt.close()


def test_gh_ground_confluence_script():
    session = make_session("gh.lcstrs", ground_confluence_mode=True)
    assert len(session.peaks) == 1
    result = run_script(session, script_text("gh_confluence.script"))
    assert result.ok, result.output
    assert session.state.is_qed()
    assert session.gc_established
    session.smt.close()


def test_undo_restores_everything():
    session = make_session("recdown_tailup.lcstrs")
    before = state_payload(session)
    assert execute(session, "induct 1").ok
    assert execute(session, ":undo").ok
    after = state_payload(session)
    assert before["equations"] == after["equations"]
    assert before["hypotheses"] == after["hypotheses"]
    session.smt.close()


def test_save_and_load_roundtrip(tmp_path):
    session = make_session("recdown_tailup.lcstrs")
    assert execute(session, "induct 1").ok
    assert execute(session, "case 2 [i < n] | [i >= n]").ok
    path = tmp_path / "partial.script"
    assert execute(session, f":save {path}").ok
    session.smt.close()

    session2 = make_session("recdown_tailup.lcstrs")
    result = execute(session2, f":load {path}")
    assert result.ok
    assert len(session2.state.contexts) == 2
    session2.smt.close()


def test_script_error_reports_step():
    session = make_session("recdown_tailup.lcstrs")
    result = run_script(session, "induct 1\nsimplify 2 left with R1\n")
    assert not result.ok
    assert "step 2" in result.output  # guard i < n is not entailed at top
    session.smt.close()


def test_session_protocol_messages():
    session = make_session("recdown_tailup.lcstrs")
    response = handle_request(session, {"id": 1, "command": "induct 1"})
    assert response["id"] == 1 and response["ok"]
    assert len(response["state"]["hypotheses"]) == 1
    response = handle_request(session, {"id": 2, "command": "nonsense"})
    assert not response["ok"] and response["error"]["code"]
    response = handle_request(session, {"id": 3, "command": ":applicable 2"})
    assert response["ok"]
    assert "simplify" in response["applicability"]
    session.smt.close()


def test_auto_command_closes_branch():
    session = make_session("recdown_tailup.lcstrs")
    assert execute(session, "induct 1").ok
    assert execute(session, "case 2 [i < n] | [i >= n]").ok
    result = execute(session, "auto 5")
    assert result.ok
    # the i < n branch collapses to a == a and is deleted by auto
    ids = [c.cid for c in session.state.contexts]
    assert len(ids) >= 1
    session.smt.close()


def test_export_command_writes_r_union_q(tmp_path):
    session = make_session("recdown_tailup.lcstrs")
    result = run_script(session, script_text("recdown_tailup.script"))
    assert result.ok
    path = tmp_path / "with_q.lcstrs"
    assert execute(session, f":export {path}").ok
    from riprover.parser import parse_system

    exported = parse_system(path.read_text())
    assert len(exported.system.rules) == 5  # R1..R4 plus the abstracted REQ1
    session.smt.close()


def test_expand_command():
    session = make_session("recdown_tailup.lcstrs")
    result = execute(session, "expand 1 left")
    assert result.ok, result.output
    assert len(session.state.contexts) == 2
    assert len(session.state.hypotheses) == 1
    session.smt.close()


def test_sum_accumulator_script_reaches_qed():
    """A recursive/tail-recursive equivalence via a postulated accumulator
    lemma; all three accumulated requirements fall to the oracle."""
    session = make_session("sum.lcstrs")
    result = run_script(session, script_text("sum.script"))
    assert result.ok, result.output
    assert session.state.is_qed()
    assert session.state.ledger.all_green()
    assert len(session.state.ledger.items) == 3
    assert session.qed_clean
    failures = session.sample_soundness(per_goal=30, budget=100_000)
    assert not failures, failures
    session.smt.close()
