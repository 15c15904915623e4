"""Writes the shape scripts and workflow fixtures in this directory.

Gold coordinates are worked out here, by hand-rolled rules that share no
code with the Rust pipeline, so the eval harness scores against an
independent answer. Run from anywhere: python3 make_fixtures.py
"""

import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent

ORD = {1: "1st", 2: "2nd", 3: "3rd"}


def ordinal(n):
    return ORD.get(n, f"{n}th")


def part(kind, color, x, y, z=1):
    return {"kind": kind, "color": color, "x": x, "y": y, "z": z}


def step(text, *parts):
    return {"text": text, "parts": list(parts)}


def run(kind, color, x, y, n, dx=0, dy=0, dz=0):
    return [part(kind, color, x + i * dx, y + i * dy, 1 + i * dz if dz else 1) for i in range(n)]


def tower(kind, color, x, y, n, base=1):
    return [part(kind, color, x, y, base + i) for i in range(n)]


def at(x, y):
    return f"at the {ordinal(x)} column, {ordinal(y)} row"


# Shapes built over a handful of instructions each. Part counts and
# instruction counts follow the published table; layouts are authored.
def task3():
    shapes = []

    shapes.append({
        "name": "A",
        "steps": [
            step("Starting on the second row and second column, place a magenta washer", part("washer", "magenta", 2, 2)),
            step("On the third row, a column of four more magenta washers. All in the second column.",
                 *run("washer", "magenta", 2, 3, 4, dy=1)),
            step(f"Place a horizontal row of three magenta washers starting {at(3, 2)}.",
                 *run("washer", "magenta", 3, 2, 3, dx=1)),
            step(f"Place a column of four magenta washers {at(5, 3)}.", *run("washer", "magenta", 5, 3, 4, dy=1)),
            step(f"Place a magenta washer {at(3, 4)}.", part("washer", "magenta", 3, 4)),
            step(f"Place a magenta washer {at(4, 4)}.", part("washer", "magenta", 4, 4)),
        ],
    })

    shapes.append({
        "name": "B",
        "steps": [
            step(f"Place a tower of three red nuts {at(2, 2)}.", *tower("nut", "red", 2, 2, 3)),
            step(f"Place a horizontal row of three blue bolts starting {at(3, 2)}.", *run("bolt", "blue", 3, 2, 3, dx=1)),
            step("Place a yellow horizontal bridge at the 2nd and 3rd columns, 4th row, and put a green washer on top.",
                 part("horizontal-bridge", "yellow", 2, 4), part("washer", "green", 2, 4, 2)),
            step("Place a white gasket in front of the yellow horizontal bridge, and place a white gasket to the right of it.",
                 part("gasket", "white", 2, 5), part("gasket", "white", 3, 5)),
        ],
    })

    shapes.append({
        "name": "C",
        "steps": [
            step(f"Place a vertical row of three green screws {at(6, 2)}.", *run("screw", "green", 6, 2, 3, dy=1)),
            step(f"Place a horizontal row of three green screws starting {at(7, 2)}.", *run("screw", "green", 7, 2, 3, dx=1)),
            step(f"Place a horizontal row of two green screws starting {at(7, 4)}.", *run("screw", "green", 7, 4, 2, dx=1)),
        ],
    })

    shapes.append({
        "name": "D",
        "steps": [
            step(f"Place a column of four orange hex nuts {at(2, 9)}.", *run("hex-nut", "orange", 2, 9, 4, dy=1)),
            step(f"Place a purple square nut {at(3, 9)}, and a purple square nut {at(3, 12)}.",
                 part("square-nut", "purple", 3, 9), part("square-nut", "purple", 3, 12)),
            step(f"Place a column of two black gaskets {at(4, 10)}.", *run("gasket", "black", 4, 10, 2, dy=1)),
            step("Put a red screw on top of the purple square nut, and put a red screw on top of the orange hex nut.",
                 part("screw", "red", 3, 12, 2), part("screw", "red", 2, 12, 2)),
        ],
    })

    shapes.append({
        "name": "E",
        "steps": [
            step(f"Place a column of five brown bolts {at(6, 9)}.", *run("bolt", "brown", 6, 9, 5, dy=1)),
            step(f"Place a horizontal row of two yellow washers starting {at(7, 9)}.", *run("washer", "yellow", 7, 9, 2, dx=1)),
            step(f"Place a yellow washer {at(7, 11)}.", part("washer", "yellow", 7, 11)),
            step(f"Place a horizontal row of two yellow washers starting {at(7, 13)}.", *run("washer", "yellow", 7, 13, 2, dx=1)),
        ],
    })

    shapes.append({
        "name": "G",
        "steps": [
            step(f"Place a horizontal row of four blue nuts starting {at(10, 2)}.", *run("nut", "blue", 10, 2, 4, dx=1)),
            step(f"Place a column of four blue nuts {at(10, 3)}.", *run("nut", "blue", 10, 3, 4, dy=1)),
            step(f"Place a horizontal row of three green washers starting {at(11, 6)}.", *run("washer", "green", 11, 6, 3, dx=1)),
            step(f"Place a column of two green washers {at(13, 4)}.", *run("washer", "green", 13, 4, 2, dy=1)),
            step(f"Build a tower of four red gaskets {at(12, 4)}.", *tower("gasket", "red", 12, 4, 4)),
        ],
    })

    shapes.append({
        "name": "+",
        "steps": [
            step(f"Place a horizontal row of five magenta bolts starting {at(10, 11)}.", *run("bolt", "magenta", 10, 11, 5, dx=1)),
            step(f"Place a column of two magenta bolts {at(12, 9)}.", *run("bolt", "magenta", 12, 9, 2, dy=1)),
            step(f"Place a column of two magenta bolts {at(12, 12)}.", *run("bolt", "magenta", 12, 12, 2, dy=1)),
        ],
    })

    shapes.append({
        "name": "Square",
        "steps": [
            step(f"Place a horizontal row of five red bolts starting {at(2, 2)}.", *run("bolt", "red", 2, 2, 5, dx=1)),
            step(f"Place a horizontal row of five blue bolts starting {at(2, 6)}.", *run("bolt", "blue", 2, 6, 5, dx=1)),
            step(f"Place a column of three green bolts {at(2, 3)}.", *run("bolt", "green", 2, 3, 3, dy=1)),
            step(f"Place a column of three yellow bolts {at(6, 3)}.", *run("bolt", "yellow", 6, 3, 3, dy=1)),
        ],
    })

    diag = [(2, 2), (3, 3), (4, 4), (5, 5), (6, 6)]
    anti = [(6, 2), (5, 3), (3, 5), (2, 6)]
    shapes.append({
        "name": "X",
        "steps": [
            step("Place " + join_list([f"a red bolt {at(x, y)}" for x, y in diag]) + ".",
                 *[part("bolt", "red", x, y) for x, y in diag]),
            step("Place " + join_list([f"a blue bolt {at(x, y)}" for x, y in anti] + [f"a blue bolt {at(4, 4)}, height 2"]) + ".",
                 *[part("bolt", "blue", x, y) for x, y in anti], part("bolt", "blue", 4, 4, 2)),
        ],
    })

    # Five-part bridge, stored, recalled once, then five ordinary parts.
    bridge = [
        part("nut", "red", 2, 5, 1), part("nut", "red", 2, 5, 2),
        part("horizontal-bridge", "blue", 2, 5, 3), part("washer", "yellow", 2, 5, 4),
        part("gasket", "white", 3, 5, 1),
    ]
    copy = [dict(p, x=p["x"] + 4) for p in bridge]
    shapes.append({
        "name": "Moroccan Bridge",
        "steps": [
            step(f"Build a tower of two red nuts {at(2, 5)}.", *bridge[:2]),
            step("Place a blue horizontal bridge at the 2nd and 3rd columns, 5th row, height 3, and put a yellow washer on top.",
                 *bridge[2:4]),
            step(f"Place a white gasket {at(3, 5)}.", bridge[4]),
            step("This is what I call a Moroccan Bridge."),
            step(f"Now make me another Moroccan Bridge {at(6, 5)}.", *copy),
            step(f"Place a horizontal row of three black square nuts starting {at(2, 7)}.",
                 *run("square-nut", "black", 2, 7, 3, dx=1)),
            step(f"Place a purple hex nut {at(8, 5)}.", part("hex-nut", "purple", 8, 5)),
            step("Put a purple hex nut on top of it.", part("hex-nut", "purple", 8, 5, 2)),
        ],
    })
    return shapes


def join_list(items):
    return ", ".join(items[:-1]) + ", and " + items[-1]


SKULL = [
    "..XXXX..",
    ".XXXXXX.",
    "XXXXXXXX",
    "X..XX..X",
    "X..XX..X",
    "XXXXXXXX",
    "XXX..XXX",
    ".XXXXXX.",
    ".X.XX.X.",
    ".XXXXXX.",
    ".XXXXXX.",
]

FACE = [
    ".XXXXX.",
    "XXXXXXX",
    "XX.X.XX",
    "XXXXXXX",
    "XXX.XXX",
    "XXXXXXX",
    "X.XXX.X",
    ".XXXXX.",
]

LETTER_I = [
    "XXXXX",
    "..X..",
    "..X..",
    "..X..",
    "..X..",
    "..X..",
    "..X..",
    "..X..",
    "..X..",
    "XXXXX",
]


def art_steps(art, kind, color, ox, oy):
    """One instruction per cell, row by row. A cell right of the previous
    one is placed relative to it; anything else gets coordinates."""
    steps = []
    prev = None
    for r, line in enumerate(art):
        for c, ch in enumerate(line):
            if ch != "X":
                continue
            x, y = ox + c, oy + r
            p = part(kind, color, x, y)
            if prev == (x - 1, y):
                text = f"Put a {color} {kind} to the right of it."
            elif len(steps) % 3 == 0:
                text = f"Place a {color} {kind} at row {y} column {x} height 1."
            else:
                text = f"Place a {color} {kind} {at(x, y)}."
            steps.append(step(text, p))
            prev = (x, y)
    return steps


def task5():
    dialogues = []

    def add(name, steps, recall_xy, art=None, name_text=None):
        first = steps[0]["parts"][0]
        dx, dy = recall_xy[0] - first["x"], recall_xy[1] - first["y"]
        original = [p for s in steps for p in s["parts"]]
        copy = [dict(p, x=p["x"] + dx, y=p["y"] + dy) for p in original]
        article = "an" if name[0] in "AEIOUX" else "a"
        d = {
            "name": name,
            "steps": steps,
            "name_text": name_text or f"This is what I call {article} {name}.",
            "recall_text": f"Now make me another {name} {at(*recall_xy)}.",
            "recalled": copy,
        }
        if art:
            d["art"] = art
        dialogues.append(d)

    add("A20 tower", [
        step(f"Place a green bolt {at(3, 3)}.", part("bolt", "green", 3, 3)),
        step("Put a red nut on top of it.", part("nut", "red", 3, 3, 2)),
        step("Put a yellow washer on top of it.", part("washer", "yellow", 3, 3, 3)),
        step("Put a blue screw on top of it.", part("screw", "blue", 3, 3, 4)),
    ], (10, 10))

    add("C15", [
        step("Can you place a blue screw at row 4 column 5 height 1", part("screw", "blue", 5, 4)),
        step("Place a red screw next to the blue screw, and put a red screw on top.",
             part("screw", "red", 6, 4), part("screw", "red", 6, 4, 2)),
        step("Place a green nut to the left of the blue screw, and put a green nut on top of it.",
             part("nut", "green", 4, 4), part("nut", "green", 4, 4, 2)),
        step("Put a yellow washer on top of the blue screw.", part("washer", "yellow", 5, 4, 2)),
        step("Put a white gasket on top of the yellow washer.", part("gasket", "white", 5, 4, 3)),
    ], (9, 8), name_text="This is what I call a C15")
    dialogues[-1]["recall_text"] = "Now make me another C15 at the eighth row and ninth column"

    add("D21", [
        step("Place an orange horizontal bridge at the 2nd and 3rd columns, 2nd row.", part("horizontal-bridge", "orange", 2, 2)),
        step("Put a black hex nut on top of it, and a black hex nut to the right of it.",
             part("hex-nut", "black", 2, 2, 2), part("hex-nut", "black", 3, 2, 2)),
        step("Place a purple square nut in front of the orange horizontal bridge.", part("square-nut", "purple", 2, 3)),
        step("Place a white vertical bridge at the 4th column, 2nd and 3rd rows, and put a brown gasket on top.",
             part("vertical-bridge", "white", 4, 2), part("gasket", "brown", 4, 2, 2)),
    ], (10, 5))

    add("X34", [
        step(f"Place a magenta bolt {at(6, 6)}.", part("bolt", "magenta", 6, 6)),
        step("Place a black nut to the left of it, and place a black nut to the right of the magenta bolt.",
             part("nut", "black", 5, 6), part("nut", "black", 7, 6)),
        step("Put a yellow gasket on top of the magenta bolt.", part("gasket", "yellow", 6, 6, 2)),
        step("Put a red washer on top of it.", part("washer", "red", 6, 6, 3)),
    ], (11, 12))

    # Walk the outline of a 5x5 square one washer at a time.
    square = [step(f"Place a blue washer {at(2, 2)}.", part("washer", "blue", 2, 2))]
    x, y = 2, 2
    for word, dx, dy, n in [("to the right of", 1, 0, 4), ("in front of", 0, 1, 4), ("to the left of", -1, 0, 4), ("behind", 0, -1, 3)]:
        for _ in range(n):
            x, y = x + dx, y + dy
            square.append(step(f"Place a blue washer {word} it.", part("washer", "blue", x, y)))
    add("Square", square, (9, 9))

    triad = []
    for i, (tx, ty) in enumerate([(2, 2), (4, 2), (3, 4)]):
        triad.append(step(f"Place a red nut {at(tx, ty)}.", part("nut", "red", tx, ty)))
        z = 2
        for j in range(5):
            if i < 2 and j == 3:
                triad.append(step("Put a red nut on top of it, and put a red nut on top.",
                                  part("nut", "red", tx, ty, z), part("nut", "red", tx, ty, z + 1)))
                z += 2
            elif i < 2 and j == 4:
                continue
            else:
                triad.append(step("Put a red nut on top of it.", part("nut", "red", tx, ty, z)))
                z += 1
    add("Triad", triad, (10, 10))

    add("Face", art_steps(FACE, "nut", "blue", 1, 2), (10, 2), art=FACE)
    add("I", art_steps(LETTER_I, "nut", "blue", 2, 2), (10, 2), art=LETTER_I)
    add("Skull", art_steps(SKULL, "nut", "blue", 1, 2), (11, 2), art=SKULL)
    return dialogues


# Synthetic API workflows in the shape of tool-use traces: one example
# call, a slot doc, and fresh queries to re-apply the template to.
APIS = [
    ("send_email", [("recipient", "email address", "email"), ("subject", "subject line", "phrase"), ("urgent", "flag", "bool")]),
    ("create_event", [("title", "event title", "phrase"), ("start", "start time", "time"), ("minutes", "duration", "int")]),
    ("book_flight", [("origin", "departure airport", "airport"), ("destination", "arrival airport", "airport"), ("date", "travel date", "date")]),
    ("convert_currency", [("amount", "amount", "float"), ("source", "source currency", "currency"), ("target", "target currency", "currency")]),
    ("get_weather", [("city", "city name", "city"), ("date", "forecast date", "date"), ("metric", "use metric units", "bool")]),
    ("search_recipes", [("ingredient", "main ingredient", "food"), ("max_minutes", "time limit", "int"), ("vegan", "vegan only", "bool")]),
    ("translate_text", [("text", "text to translate", "phrase"), ("source", "source language", "lang"), ("target", "target language", "lang")]),
    ("reserve_table", [("restaurant", "restaurant name", "venue"), ("guests", "party size", "int"), ("time", "reservation time", "time")]),
    ("track_package", [("carrier", "carrier name", "carrier"), ("tracking", "tracking number", "code")]),
    ("post_message", [("channel", "channel name", "channel"), ("text", "message body", "phrase"), ("pin", "pin it", "bool")]),
    ("create_issue", [("repo", "repository", "repo"), ("title", "issue title", "phrase"), ("priority", "priority level", "int")]),
    ("get_stock_price", [("symbol", "ticker symbol", "ticker"), ("date", "trading date", "date")]),
    ("rent_car", [("city", "pickup city", "city"), ("start", "pickup date", "date"), ("days", "rental days", "int")]),
    ("order_food", [("restaurant", "restaurant name", "venue"), ("dish", "dish", "food"), ("quantity", "quantity", "int")]),
    ("set_reminder", [("text", "reminder text", "phrase"), ("time", "reminder time", "time"), ("repeat", "repeat daily", "bool")]),
    ("find_hotel", [("city", "city", "city"), ("checkin", "check-in date", "date"), ("nights", "nights", "int"), ("pool", "needs a pool", "bool")]),
    ("play_song", [("title", "song title", "phrase"), ("artist", "artist name", "person")]),
    ("share_file", [("path", "file path", "path"), ("recipient", "email address", "email"), ("editable", "allow edits", "bool")]),
    ("get_directions", [("origin", "start address", "city"), ("destination", "end address", "city"), ("mode", "travel mode", "mode")]),
    ("log_workout", [("activity", "activity", "sport"), ("minutes", "duration", "int"), ("calories", "calories burned", "int")]),
]

POOLS = {
    "email": ["alex@example.com", "sam@example.org", "kim@example.net", "lee@example.com", "noor@example.org", "ravi@example.net"],
    "phrase": ["quarterly review", "team lunch", "budget update", "launch plan", "weekly sync", "design notes", "release checklist", "hello world"],
    "time": ["09:00", "10:30", "13:15", "15:00", "17:45", "19:30"],
    "int": [1, 2, 3, 4, 5, 8, 10, 15, 20, 30, 45, 60, 90],
    "airport": ["JFK", "LHR", "CDG", "NRT", "SFO", "FRA", "DXB", "SYD"],
    "date": ["2024-03-01", "2024-04-15", "2024-05-20", "2024-07-04", "2024-09-12", "2024-11-30"],
    "float": [12.5, 100.0, 250.75, 999.99, 42.0, 3.5],
    "currency": ["USD", "EUR", "GBP", "JPY", "CHF", "CAD"],
    "city": ["Paris", "Tokyo", "Lagos", "Lima", "Oslo", "Denver", "Pune", "Cairo"],
    "bool": [True, False],
    "food": ["lentils", "tofu", "salmon", "mushrooms", "chickpeas", "rice"],
    "lang": ["en", "fr", "de", "es", "ja", "sw"],
    "venue": ["Blue Door", "Casa Verde", "The Anchor", "Saffron", "Kobe House"],
    "carrier": ["UPS", "FedEx", "DHL", "USPS"],
    "code": ["1Z999AA10123456784", "7489 2234 9910", "JD014600006281", "9400 1000 0000"],
    "channel": ["#general", "#random", "#ops", "#design"],
    "repo": ["web/app", "infra/terraform", "ml/pipeline", "docs/site"],
    "ticker": ["AAPL", "MSFT", "TSLA", "NVDA", "AMZN"],
    "person": ["Nina Simone", "Miles Davis", "Fela Kuti", "Bjork"],
    "path": ["/reports/q1.pdf", "/notes/todo.txt", "/img/logo.png", "/data/sales.csv"],
    "mode": ["driving", "walking", "transit", "cycling"],
    "sport": ["running", "swimming", "rowing", "yoga"],
}


def call_text(name, args):
    return f"{name}({', '.join(json.dumps(a) for a in args)})"


def toolbench(rng):
    rows = []
    for i in range(100):
        name, slots = APIS[i % len(APIS)]
        variant = i // len(APIS)
        fn = f"{name}_v{variant}" if variant else name

        def bind():
            return [rng.choice(POOLS[kind]) for _, _, kind in slots]

        example = bind()
        queries = []
        for _ in range(rng.randint(1, 3)):
            vals = bind()
            queries.append({slot: v for (slot, _, _), v in zip(slots, vals)})
        rows.append({
            "id": f"wf-{i:03}",
            "example": call_text(fn, example),
            "doc": [{"name": s, "role": r} for s, r, _ in slots],
            "queries": queries,
            "gold": [call_text(fn, [q[s] for s, _, _ in slots]) for q in queries],
        })
    return rows


def check_counts(shapes, dialogues):
    want3 = {"A": (14, 6), "B": (10, 4), "C": (8, 3), "D": (10, 4), "E": (10, 4), "G": (17, 5),
             "+": (9, 3), "Square": (16, 4), "X": (10, 2), "Moroccan Bridge": (15, 8)}
    for s in shapes:
        got = (sum(len(st["parts"]) for st in s["steps"]), len(s["steps"]))
        assert got == want3[s["name"]], (s["name"], got)
    want5 = {"A20 tower": (4, 5), "C15": (7, 6), "D21": (6, 5), "X34": (5, 5), "Square": (16, 17),
             "Triad": (18, 17), "Face": (47, 48), "I": (18, 19), "Skull": (62, 63)}
    for d in dialogues:
        got = (sum(len(st["parts"]) for st in d["steps"]), len(d["steps"]) + 1)
        assert got == want5[d["name"]], (d["name"], got)
        if "art" in d:
            cells = sum(line.count("X") for line in d["art"])
            assert cells == got[0], (d["name"], cells)


def main():
    shapes = task3()
    dialogues = task5()
    check_counts(shapes, dialogues)
    (HERE / "task3_shapes.json").write_text(json.dumps({"format": 1, "shapes": shapes}, indent=1) + "\n")
    (HERE / "task5_dialogues.json").write_text(json.dumps({"format": 1, "dialogues": dialogues}, indent=1) + "\n")
    rows = toolbench(random.Random(20240501))
    (HERE / "toolbench.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))


if __name__ == "__main__":
    main()
