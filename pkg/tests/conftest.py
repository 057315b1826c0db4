import sys
from pathlib import Path

from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from freightcast.sarimax import model as _model  # noqa: E402
from ledger import ACCEPTANCE_LINES, AIC_LEDGER  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# Every FittedModel built anywhere in the suite passes through this check,
# so the AIC identity is verified on every fit, not only in dedicated tests.
_original_post_init = _model.FittedModel.__post_init__


def _recording_post_init(self):
    AIC_LEDGER["checked"] += 1
    if self.aic != 2 * self.k_params - 2 * self.loglik:
        AIC_LEDGER["violations"].append((self.order.label(), self.aic, self.loglik))
    _original_post_init(self)


_model.FittedModel.__post_init__ = _recording_post_init


def pytest_terminal_summary(terminalreporter):
    terminalreporter.write_line(
        f"AIC identity checked on {AIC_LEDGER['checked']} fitted models; "
        f"violations: {len(AIC_LEDGER['violations'])}")
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
