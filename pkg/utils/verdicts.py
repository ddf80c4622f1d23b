"""
Verdict Ledger

Collects the pass/fail verdicts of one run. The exit status of the runner is
0 iff every recorded verdict passed.
"""

import logging
from typing import Callable, Dict, List

logger = logging.getLogger(__name__)


class VerdictRunner:
    """Ledger of named verdicts"""

    def __init__(self):
        self.verdicts: List[Dict] = []

    def record(self, name: str, passed: bool, detail: str = "") -> Dict:
        """Record one verdict"""
        verdict = {'name': name, 'passed': bool(passed), 'detail': detail}
        self.verdicts.append(verdict)
        level = logging.INFO if passed else logging.WARNING
        logger.log(level, "verdict %s: %s %s", name, "pass" if passed else "fail", detail)
        return verdict

    def run_check(self, name: str, check: Callable, *args, **kwargs):
        """
        Run a check returning a report with a `passed` attribute and record it

        Returns:
            the report produced by check
        """
        report = check(*args, **kwargs)
        self.record(name, report.passed)
        return report

    @property
    def passed(self) -> bool:
        return all(v['passed'] for v in self.verdicts)

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 1

    def summary(self) -> Dict[str, str]:
        """verdict.<name> = pass / fail entries for the run manifest"""
        out = {f"verdict.{v['name']}": "pass" if v['passed'] else "fail" for v in self.verdicts}
        out["verdict"] = "pass" if self.passed else "fail"
        return out

    def generate_report(self) -> str:
        """Human-readable verdict table"""
        if not self.verdicts:
            return "No verdicts recorded"

        passed = sum(1 for v in self.verdicts if v['passed'])
        report = f"Verdicts: {passed}/{len(self.verdicts)} passed\n"
        report += "=" * 40 + "\n"
        for v in self.verdicts:
            status = "PASS" if v['passed'] else "FAIL"
            report += f"{v['name']}: {status}\n"
            if v['detail'] and not v['passed']:
                report += f"  {v['detail']}\n"
        return report
