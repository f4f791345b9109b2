import os
import sys

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from mvgames.model import AgentType, GameConfig, MarketParams  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

unit = st.floats(0.0, 1.0, allow_nan=False)


@st.composite
def markets(draw):
    r = draw(st.floats(0.0, 0.1))
    lam = draw(st.floats(0.1, 5.0).filter(lambda v: abs(v - r) > 1e-3 and abs(v - 2 * r) > 1e-3))
    return MarketParams(r, lam)


@st.composite
def agents(draw, r=0.05):
    return AgentType(
        x0=draw(st.floats(-1.0, 1.0)), b=r + draw(st.floats(0.02, 0.3)), xi=draw(st.floats(0.05, 0.5)),
        sigma=draw(st.floats(0.05, 0.5)), phi=draw(unit), gamma=draw(st.floats(0.5, 5.0)),
        mu1=draw(st.floats(0.0, 2.0)), mu2=draw(st.floats(0.0, 3.0)),
    )


@st.composite
def configs(draw, sizes=(1, 2, 3, 5, 10)):
    m = draw(markets())
    n = draw(st.sampled_from(sizes))
    return GameConfig(tuple(draw(agents(m.r)) for _ in range(n)), m)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
