#!/usr/bin/env python3
"""Writes network.tsv and timetable.tsv for the bundled synthetic dataset.

Trains are placed one by one in order of first departure. A departure is
pushed back minute by minute until the onward track and the next platform
are both free, so the result needs no conflict repair.

Usage: python3 gen_timetable.py [-v] [out_dir]

-v lists every wait added on top of the planned dwell.
"""

import sys
from pathlib import Path

JOURNEY = 12
DWELL = 2
ORIGIN_DWELL = 5

# (id, code, platforms, junction); ids fall towards the west, so westbound
# running uses DOWN tracks and eastbound running uses UP tracks.
STATIONS = [
    (1, "JAJ", 4, 0), (2, "STL", 2, 0), (3, "MDP", 3, 0), (4, "JMT", 3, 0),
    (5, "CRJ", 3, 0), (6, "DHN", 6, 1), (7, "BRR", 3, 0), (8, "STN", 3, 1),
    (9, "ASN", 6, 1), (10, "RNG", 3, 0), (11, "UDL", 4, 1), (12, "PAW", 2, 0),
    (13, "BMGA", 2, 0), (14, "RPH", 3, 0), (15, "SNT", 4, 1), (16, "DGR", 4, 0),
    (17, "PAN", 3, 0), (18, "KAN", 4, 1), (19, "BWN", 6, 1), (20, "KWAE", 3, 1),
    (21, "SKG", 3, 1), (22, "TAK", 2, 0), (23, "KQU", 2, 1), (24, "BDC", 5, 1),
    (25, "DKAE", 3, 1), (26, "SHE", 4, 1), (27, "BLY", 4, 1), (28, "HWH", 6, 1),
]

# (a, b, track count)
PAIRS = [
    ("HWH", "BLY", 4), ("BLY", "SHE", 4), ("BLY", "DKAE", 2), ("SHE", "BDC", 4),
    ("SHE", "KQU", 1), ("KQU", "TAK", 1), ("DKAE", "KQU", 2), ("KQU", "SKG", 2),
    ("BDC", "SKG", 3), ("SKG", "BWN", 4), ("BDC", "KWAE", 1), ("KWAE", "BWN", 1),
    ("BWN", "KAN", 4), ("KAN", "PAN", 3), ("KAN", "SNT", 2), ("SNT", "RPH", 2),
    ("PAN", "DGR", 3), ("DGR", "UDL", 3), ("UDL", "PAW", 1), ("PAW", "BMGA", 1),
    ("BMGA", "SNT", 1), ("UDL", "RNG", 3), ("RNG", "ASN", 4), ("ASN", "STN", 3),
    ("STN", "BRR", 3), ("BRR", "DHN", 3), ("STN", "CRJ", 2), ("CRJ", "JMT", 2),
    ("JMT", "MDP", 2), ("MDP", "STL", 2), ("STL", "JAJ", 2),
]

ROLES = {
    1: ["GENERAL"],
    2: ["UP", "DOWN"],
    3: ["UP", "DOWN", "GENERAL"],
    4: ["UP", "DOWN", "UP", "DOWN"],
}

MAIN = "HWH BLY SHE BDC SKG BWN KAN PAN DGR UDL RNG ASN STN".split()
CHORD = "DKAE KQU SKG BWN KAN PAN DGR UDL RNG ASN STN".split()
TO_DHN = ["BRR", "DHN"]
TO_JAJ = "CRJ JMT MDP STL JAJ".split()

# (number, category, first departure HH:MM, stations, stops); a stop list of
# None means every station. Origin and terminal always count as stops.
TRAINS = [
    ("12313", "Premium", "16:52", CHORD + TO_DHN, {"BWN", "ASN"}),
    ("12301", "Premium", "16:26", MAIN + TO_DHN, {"BWN", "ASN"}),
    ("12273", "Premium", "12:05", MAIN + TO_DHN, set()),
    ("12303", "Mail", "06:05", MAIN + TO_JAJ, {"BWN", "DGR", "ASN", "MDP"}),
    ("12019", "Premium", "05:50", MAIN + TO_DHN, {"BWN", "DGR", "ASN"}),
    ("22387", "Passenger", "05:20", MAIN + TO_DHN, {"BDC", "BWN", "PAN", "DGR", "ASN"}),
    ("13051", "Passenger", "05:47", "HWH BLY SHE BDC SKG BWN KAN SNT".split(), {"BLY", "BWN"}),
    ("12329", "Mail", "19:25", ["DHN", "BRR"] + MAIN[::-1], {"ASN", "BWN"}),
    ("12339", "Passenger", "16:05", MAIN + TO_DHN, {"BDC", "BWN", "DGR", "ASN"}),
    ("12341", "Passenger", "18:00", MAIN[:-1], {"BDC", "BWN", "DGR"}),
    ("13009", "Mail", "19:05", MAIN + TO_JAJ, {"BWN", "ASN", "MDP"}),
    ("37211", "Local", "07:20", "HWH BLY SHE BDC".split(), None),
    ("13017", "Passenger", "14:00", "HWH BLY SHE BDC KWAE BWN KAN SNT RPH".split(), {"BDC", "KWAE", "BWN", "SNT"}),
    ("37911", "Local", "08:30", "HWH BLY SHE BDC KWAE".split(), None),
    ("63541", "Local", "09:30", ["ASN", "STN"] + TO_DHN, None),
    ("53061", "Local", "06:36", MAIN[5:] + TO_DHN, None),
    ("15662", "Mail", "12:00", "RPH SNT BMGA PAW UDL RNG ASN STN BRR DHN".split(), {"SNT", "UDL", "ASN"}),
    ("63525", "Local", "17:36", MAIN[5:12], None),
    ("63523", "Local", "17:00", MAIN[5:12], None),
    ("53131", "Passenger", "05:40", "DKAE KQU SKG BWN KAN SNT RPH".split(), {"SKG", "BWN", "SNT"}),
    ("12359", "Premium", "19:20", MAIN + TO_JAJ, {"ASN"}),
]


def hhmm(t):
    return f"{t // 60:02d}:{t % 60:02d}"


def minutes(s):
    h, m = s.split(":")
    return int(h) * 60 + int(m)


class Network:
    def __init__(self):
        self.ids = {code: sid for sid, code, _, _ in STATIONS}
        self.platforms = {code: p for _, code, p, _ in STATIONS}
        self.tracks = {}  # frozenset pair -> [(track id, role)]
        tid = 0
        for a, b, n in PAIRS:
            for role in ROLES[n]:
                tid += 1
                self.tracks.setdefault(frozenset((a, b)), []).append((tid, role, a, b))

    def allowed(self, a, b):
        out = []
        for idx, (tid, role, _, _) in enumerate(self.tracks[frozenset((a, b))], 1):
            up = self.ids[a] < self.ids[b]
            if role == "GENERAL" or (role == "UP") == up:
                out.append((idx, tid))
        return out

    def write(self, path):
        lines = ["# Synthetic network on the station set of the Howrah and Asansol divisions.",
                 "# Journey times are uniform: all stations are taken as equidistant.",
                 "[stations]", "# id\tcode\tplatforms\tjunction"]
        lines += [f"{i}\t{c}\t{p}\t{j}" for i, c, p, j in STATIONS]
        lines += ["", "[tracks]", "# id\tfrom\tto\trole\tjourney"]
        for a, b, n in PAIRS:
            for tid, role, _, _ in self.tracks[frozenset((a, b))]:
                lines.append(f"{tid}\t{a}\t{b}\t{role}\t{JOURNEY}")
        path.write_text("\n".join(lines) + "\n")


def free(busy, key, start, end):
    return all(end <= s or e <= start for s, e in busy.get(key, []))


def place(net, plat_busy, track_busy, train):
    number, _, dep, route, stops = train
    stop = lambda i: i == 0 or i == len(route) - 1 or stops is None or route[i] in stops
    rows = []
    t = minutes(dep)
    # origin platform, first come first served
    at = t - ORIGIN_DWELL
    while True:
        k = roomiest(plat_busy, route[0], net.platforms[route[0]], at, t)
        if k:
            break
        at, t = at + 1, t + 1
    cur = [route[0], at, t, k]
    for i in range(1, len(route)):
        a_code, b_code = route[i - 1], route[i]
        d = cur[2]
        while True:
            arr = d + JOURNEY
            dwell = DWELL if stop(i) and i < len(route) - 1 else 0
            hold = max(dwell, 1)
            choice = None
            for idx, tid in net.allowed(a_code, b_code):
                if not free(track_busy, tid, d, arr):
                    continue
                k = roomiest(plat_busy, b_code, net.platforms[b_code], arr, arr + hold)
                if k:
                    choice = (idx, tid, k)
                    break
            # the train still holds its platform while it waits
            if choice and free_after(plat_busy, cur, d):
                break
            d += 1
            if d - cur[2] > 240:
                raise SystemExit(f"cannot place {number} after {a_code}")
        idx, tid, k = choice
        if d > cur[2] and "-v" in sys.argv:
            print(f"{number} waits {d - cur[2]} at {a_code} {hhmm(cur[2])}", file=sys.stderr)
        cur[2] = d
        rows.append((cur, idx))
        hold_end = d if d > cur[1] else cur[1] + 1
        plat_busy.setdefault((cur[0], cur[3]), []).append((cur[1], hold_end))
        track_busy.setdefault(tid, []).append((d, arr))
        dwell = DWELL if stop(i) and i < len(route) - 1 else 0
        cur = [b_code, arr, arr + dwell, k]
    plat_busy.setdefault((cur[0], cur[3]), []).append((cur[1], cur[1] + 1))
    rows.append((cur, None))
    return rows


def roomiest(plat_busy, code, count, start, end):
    """The free platform with the longest quiet spell after `start`."""
    best = None
    for k in range(1, count + 1):
        if not free(plat_busy, (code, k), start, end):
            continue
        nxt = min((s for s, _ in plat_busy.get((code, k), []) if s >= end), default=10**6)
        if best is None or nxt > best[0]:
            best = (nxt, k)
    return best and best[1]


def free_after(plat_busy, cur, d):
    code, at, dt, k = cur
    end = d if d > at else at + 1
    return free(plat_busy, (code, k), at, end)


def main():
    args = [a for a in sys.argv[1:] if a != "-v"]
    out = Path(args[0]) if args else Path(__file__).parent
    net = Network()
    net.write(out / "network.tsv")
    plat_busy, track_busy = {}, {}
    placed = {}
    for train in sorted(TRAINS, key=lambda tr: minutes(tr[2])):
        placed[train[0]] = place(net, plat_busy, track_busy, train)
    lines = ["# Synthetic 24h timetable, generated by gen_timetable.py.",
             "[trains]", "# number\tcategory"]
    lines += [f"{num}\t{cat}" for num, cat, *_ in TRAINS]
    lines += ["", "[entries]", "# number\tstation\tarrival\tdeparture\tplatform\ttrack"]
    for num, *_ in TRAINS:
        for (code, at, dt, k), idx in placed[num]:
            lines.append(f"{num}\t{code}\t{hhmm(at)}\t{hhmm(dt)}\t{k}\t{idx if idx else '-'}")
    (out / "timetable.tsv").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
