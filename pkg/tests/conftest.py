import os

from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
  if not ACCEPTANCE:
    return
  terminalreporter.section("acceptance criteria")
  for name in sorted(ACCEPTANCE):
    ok, detail = ACCEPTANCE[name]
    terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'} ({detail})")
