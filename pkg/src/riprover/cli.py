"""Command-line entry point: prove <system> [options]."""

from __future__ import annotations

import argparse
import sys

from .commands import repl, run_script, serve_session, serve_tcp
from .engine import RuleError
from .parser import ParseError, parse_system, parse_term_text
from .session import ProofSession
from .smt import SmtSession, default_command


def build_argparser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="prove",
        description="Interactive inductive-theorem prover for constrained rewrite systems",
    )
    p.add_argument("system", help="system file (.lcstrs)")
    p.add_argument("--goal", action="append", default=[], help="extra goal equation, e.g. 'f x == g x [x >= 0]'")
    p.add_argument("--script", help="run a proof script instead of the REPL")
    p.add_argument("--ground-confluence", action="store_true", help="prove ground confluence of the system")
    p.add_argument("--auto", action="store_true", help="run the auto tactic once at start")
    p.add_argument("--trust-quasi-reductive", action="store_true")
    p.add_argument("--trust-termination", action="store_true")
    p.add_argument("--trust-ground-confluence", action="store_true")
    p.add_argument("--trust-weak-normalization", action="store_true")
    p.add_argument("--smt-cmd", help="external SMT solver command (SMT-LIB 2 on stdin/stdout)")
    p.add_argument("--timeout", type=float, default=5.0, help="per-query solver timeout in seconds")
    p.add_argument("--serve", action="store_true", help="serve the JSON session protocol")
    p.add_argument(
        "--port",
        type=int,
        default=None,
        help="serve over TCP on 127.0.0.1:PORT (0 picks a free port); default is stdio",
    )
    return p


def make_session(args) -> ProofSession:
    with open(args.system) as fh:
        text = fh.read()
    sf = parse_system(text)
    trusts = set()
    if args.trust_quasi_reductive:
        trusts.add("quasi-reductivity")
    if args.trust_termination:
        trusts.add("termination")
    if args.trust_ground_confluence:
        trusts.add("ground-confluence")
    if args.trust_weak_normalization:
        trusts.add("weak-normalization")
    import shlex

    smt = SmtSession(
        command=shlex.split(args.smt_cmd) if args.smt_cmd else None, timeout=args.timeout
    )
    goals = list(sf.goals)
    for text_goal in args.goal:
        from .commands import _parse_equation

        dummy = ProofSession.__new__(ProofSession)
        dummy.sys = sf.system
        goals.append(_parse_equation(dummy, text_goal))
    return ProofSession(
        sf.system,
        goals,
        smt=smt,
        trusts=trusts,
        ground_confluence_mode=args.ground_confluence,
    )


def exit_code(session: ProofSession) -> int:
    if session.refutation is not None:
        return 0
    if session.state.is_qed() and session.state.ledger.all_green():
        return 0
    return 1


def main(argv=None) -> int:
    args = build_argparser().parse_args(argv)
    try:
        session = make_session(args)
    except (ParseError, RuleError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        if args.auto:
            from .commands import execute

            result = execute(session, "auto")
            if result.output:
                print(result.output)
        if args.serve:
            if args.port is not None:
                def factory():
                    return session

                def announce(port):
                    print(f"listening on 127.0.0.1:{port}", flush=True)

                serve_tcp(factory, "127.0.0.1", args.port, announce)
            else:
                serve_session(session, sys.stdin, sys.stdout)
            return exit_code(session)
        if args.script:
            with open(args.script) as fh:
                result = run_script(session, fh.read())
            if not result.ok:
                print(result.output, file=sys.stderr)
                return 2
            if session.refutation is not None:
                print("outcome: refuted (⊥)")
            elif session.state.is_qed():
                if session.conclusion:
                    print(session.conclusion)
                print("outcome: QED")
            else:
                print("outcome: incomplete")
                print(session.render_equations())
            return exit_code(session)
        repl(session)
        return exit_code(session)
    finally:
        session.smt.close()


if __name__ == "__main__":
    raise SystemExit(main())
