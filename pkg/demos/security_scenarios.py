"""Adversary scripts against a small CARAMEL session, with the interesting part of each trace.

    python demos/security_scenarios.py
"""

from cfaudit.channel import DOWN, UP, AdversaryScript, Drop, Forge, Rule, TamperByte, UntrustedAccess
from cfaudit.monitors import Region
from cfaudit.sim import Mode, Workload, run_simulation

wl = Workload("demo", branch_rate=200, total_branches=40)
mode = Mode.caramel(64)


def run(adv=None):
    return run_simulation(mode, wl, adv=adv, seed=3)


first_report = run().reports[0]
cases = {
    "drop the first response": AdversaryScript([Rule(DOWN, 1, Drop())]),
    "tamper with the first response": AdversaryScript([Rule(DOWN, 1, TamperByte(0, 0xFF))]),
    "tamper with a slice in flight": AdversaryScript([Rule(UP, 2, TamperByte(5, 0xAB))]),
    "replay report #1 later": AdversaryScript([Rule(UP, 3, Forge(first_report))]),
    "app writes into the log": AdversaryScript(device=[UntrustedAccess(10, Region.CFLOG)]),
}

for title, adv in cases.items():
    res = run(adv)
    print(f"== {title}: {res.outcome.value}")
    for line in res.trace_lines():
        if any(k in line for k in ("vrf", "verdict", "retransmit", "heal", "violation", "end ")):
            print("   ", line)
