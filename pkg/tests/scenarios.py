"""Scripted adversary scenarios shared by the engine tests and the acceptance suite."""

from cfaudit.channel import DOWN, UP, AdversaryScript, Drop, Forge, Hijack, Rule, TamperByte, UntrustedAccess
from cfaudit.monitors import Region
from cfaudit.sim import Mode, Workload, run_simulation

WL = Workload("scenario", branch_rate=200, total_branches=40)
MODE = Mode.caramel(64)
SEED = 3


def run(adv=None, **kw):
    return run_simulation(MODE, WL, adv=adv, seed=SEED, **kw)


def honest():
    return run()


def scripts():
    first_report = honest().reports[0]
    return {
        "a_drop_response": AdversaryScript([Rule(DOWN, 1, Drop())]),
        "b_forged_response": AdversaryScript([Rule(DOWN, 1, Forge(bytes(range(66))))]),
        "b_tampered_response": AdversaryScript([Rule(DOWN, 1, TamperByte(0, 0xFF))]),
        "c_tampered_slice": AdversaryScript([Rule(UP, 2, TamperByte(5, 0xAB))]),
        "d_replayed_report": AdversaryScript([Rule(UP, 3, Forge(first_report))]),
        "e_write_cflog": AdversaryScript(device=[UntrustedAccess(10, Region.CFLOG)]),
        "e_write_key": AdversaryScript(device=[UntrustedAccess(10, Region.KEY)]),
        "e_write_cmuart": AdversaryScript(device=[UntrustedAccess(10, Region.CMUART_CONFIG)]),
        "hijack": AdversaryScript(device=[Hijack(20, 0xE006, 0xE100)]),
    }


def events(res):
    """Trace lines without timestamps."""
    return [line.split(" ", 1)[1] for line in res.trace_lines()]


def window(evts, first, last):
    """Events from the first occurrence of ``first`` through the next ``last``."""
    i = evts.index(first)
    j = evts.index(last, i)
    return evts[i:j + 1]


# The exact event sequences each scenario must show around the attack.
EXPECTED = {
    "a_drop_response": (
        "attest T2 top=0 bot=32", "accepted_addr",
        ["attest T2 top=0 bot=32", "send_addr", "stream_done len=68", "trigger T4", "dispatch T4",
         "vrf Accept T2 len=68", "retransmit len=68", "vrf Accept dup len=68", "trigger T3",
         "dispatch T3", "verdict Accepted", "accepted_addr"]),
    "b_forged_response": (
        "vrf Accept T2 len=68", "accepted_addr",
        ["vrf Accept T2 len=68", "trigger T3", "dispatch T3", "trigger T3", "verdict AuthFail",
         "dispatch T3", "verdict Accepted", "accepted_addr"]),
    "b_tampered_response": (
        "vrf Accept T2 len=68", "accepted_addr",
        ["vrf Accept T2 len=68", "trigger T3", "dispatch T3", "verdict AuthFail", "retransmit len=68",
         "vrf Accept dup len=68", "trigger T3", "dispatch T3", "verdict Accepted", "accepted_addr"]),
    "c_tampered_slice": (
        "attest T2 top=32 bot=0", "end healed",
        ["attest T2 top=32 bot=0", "send_addr", "stream_done len=68", "trigger T4", "dispatch T4",
         "vrf RejectAuth - len=68", "trigger T3", "dispatch T3", "verdict Rejected", "heal reset",
         "end healed"]),
    "d_replayed_report": (
        "vrf RejectAuth - len=68", "accepted_addr",
        ["vrf RejectAuth - len=68", "trigger T4", "dispatch T4", "vrf Accept T2 len=68", "trigger T3",
         "dispatch T3", "verdict AuthFail", "trigger T3", "dispatch T3", "verdict Accepted",
         "accepted_addr"]),
    "e_write_cflog": ("stream_done len=68", "end reset",
                      ["stream_done len=68", "violation untrusted_write_of_cflog", "end reset"]),
    "e_write_key": ("stream_done len=68", "end reset",
                    ["stream_done len=68", "violation untrusted_write_of_key", "end reset"]),
    "e_write_cmuart": ("stream_done len=68", "end reset",
                       ["stream_done len=68", "violation untrusted_write_of_cmuart_config", "end reset"]),
}
