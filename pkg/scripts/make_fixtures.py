"""Regenerate the synthetic FrameNet-style fixture corpus.

Sentences are written with inline markup: ``[*text]`` marks the target and
``[Role:text]`` a frame element. ``{Role}`` appended to a sentence adds a
null-instantiated element (no offsets), as FrameNet does.

    python scripts/make_fixtures.py
"""
import re
import xml.etree.ElementTree as ET
from pathlib import Path

NS = "http://framenet.icsi.berkeley.edu"
OUT = Path(__file__).resolve().parents[1] / "src" / "frameicl" / "data" / "fixtures"

FRAMES = {
    "Killing": {
        "definition": "A <fen>Killer</fen> or a <fen>Cause</fen> brings about the death of a <fen>Victim</fen>.",
        "example": "<fex name=\"Killer\">The sentry</fex> <t>killed</t> <fex name=\"Victim\">the intruder</fex>.",
        "elements": [
            ("Killer", "Core", "The person or sentient entity that causes the death of the Victim."),
            ("Cause", "Core", "An inanimate entity or process that causes the death of the Victim."),
            ("Victim", "Core", "The living entity that dies as a result of the killing."),
            ("Instrument", "Core", "The device used by the Killer to bring about the death."),
            ("Means", "Core", "The method or action that the Killer or Cause performs resulting in the death."),
            ("Place", "Peripheral", "Where the killing takes place."),
            ("Time", "Peripheral", "When the killing takes place."),
            ("Manner", "Peripheral", "The way in which the killing is carried out."),
        ],
        "lus": ["kill.v", "murder.v"],
    },
    "Theft": {
        "definition": "A <fen>Perpetrator</fen> takes <fen>Goods</fen> that belong to someone else, from a <fen>Victim</fen> or a <fen>Source</fen>.",
        "example": "<fex name=\"Perpetrator\">The burglar</fex> <t>stole</t> <fex name=\"Goods\">the silver</fex>.",
        "elements": [
            ("Perpetrator", "Core", "The person who takes the Goods."),
            ("Goods", "Core", "The objects that are taken."),
            ("Victim", "Core", "The person or institution that owns the Goods."),
            ("Source", "Core", "The location from which the Goods are taken."),
            ("Place", "Peripheral", "Where the theft happens."),
            ("Time", "Peripheral", "When the theft happens."),
            ("Manner", "Peripheral", "How the theft is carried out."),
        ],
        "lus": ["steal.v", "rob.v"],
    },
    "Rescuing": {
        "definition": "An <fen>Agent</fen> frees a <fen>Patient</fen> from a <fen>Harmful_situation</fen>.",
        "example": "<fex name=\"Agent\">The ranger</fex> <t>rescued</t> <fex name=\"Patient\">the lost hiker</fex>.",
        "elements": [
            ("Agent", "Core", "The person or group who ends the Patient's exposure to harm."),
            ("Patient", "Core", "The entity that is freed from the Harmful_situation."),
            ("Harmful_situation", "Core", "The dangerous situation the Patient is removed from."),
            ("Place", "Peripheral", "Where the rescue happens."),
            ("Time", "Peripheral", "When the rescue happens."),
            ("Means", "Peripheral", "The method used by the Agent."),
        ],
        "lus": ["rescue.v", "save.v"],
    },
}

EXAMPLES = {
    "kill.v": [
        "[Killer:The raiders] had [*killed] or wounded [Victim:most of the garrison].",
        "[Killer:The hunter] [*killed] [Victim:the wounded deer] [Instrument:with a single arrow].",
        "[Cause:A falling rock] [*killed] [Victim:two climbers] [Place:near the summit] [Time:on Sunday].",
        "[Victim:Four soldiers] were [*killed] [Cause:by the avalanche]. {Killer}",
        "[Killer:The poacher] [*killed] [Victim:the elephant] [Means:by poisoning its water hole].",
        "[Cause:The flood] [*killed] [Victim:hundreds of cattle] [Time:last spring].",
        "[Victim:The mayor] was [*killed] [Killer:by an unknown gunman] [Place:outside city hall].",
        "[Killer:She] [*killed] [Victim:the spider] [Instrument:with a rolled newspaper].",
        "[Cause:Pneumonia] [*killed] [Victim:my grandfather] [Time:in 1987].",
        "Nobody knows why [Killer:the stranger] [*killed] [Victim:the shepherd's dog].",
        "[Victim:Three fishermen] were [*killed] when the storm capsized their boat.",
        "[Killer:The knight] [*killed] [Victim:the dragon] [Instrument:with his lance] [Manner:without hesitation].",
        "[Cause:The frost] [*killed] [Victim:most of the orange trees].",
        "[Killer:Rebels] [*killed] [Victim:a village elder] [Place:in the northern hills].",
        "[Killer:The cat] [*killed] [Victim:a sparrow] [Time:this morning].",
        "[Victim:The prisoner] was [*killed] [Means:by starvation].",
        "[Cause:An infection] nearly [*killed] [Victim:the young patient].",
        "[Killer:The assassin] [*killed] [Victim:the ambassador] [Means:by poisoning his wine].",
        "[Cause:Lightning] [*killed] [Victim:a golfer] [Place:on the ninth hole].",
        "He swore that [Killer:he] had never [*killed] [Victim:anyone].",
    ],
    "murder.v": [
        "[Killer:The butler] [*murdered] [Victim:the wealthy widow] [Instrument:with a candlestick].",
        "[Victim:The journalist] was [*murdered] [Place:in her apartment] [Time:last night].",
        "[Killer:The gang] [*murdered] [Victim:a rival dealer] [Means:by drowning him in the river].",
        "Police believe [Killer:the nephew] [*murdered] [Victim:his uncle] for the inheritance.",
        "[Killer:A jealous lover] [*murdered] [Victim:the singer] [Instrument:with a kitchen knife].",
        "[Victim:Two guards] were [*murdered] during the prison riot.",
        "[Killer:The tyrant] [*murdered] [Victim:thousands of dissidents].",
        "[Killer:Somebody] [*murdered] [Victim:the old miser] [Place:in his counting house].",
        "[Victim:The informant] had been [*murdered] [Killer:by the cartel] [Time:weeks earlier].",
        "[Killer:The pirates] [*murdered] [Victim:the captain] [Means:by throwing him overboard].",
    ],
    "steal.v": [
        "[Perpetrator:A thief] [*stole] [Goods:my bicycle] [Source:from the garage].",
        "[Perpetrator:The boys] [*stole] [Goods:apples] [Source:from the orchard] [Time:every autumn].",
        "[Goods:Priceless paintings] were [*stolen] [Source:from the museum] [Time:overnight].",
        "[Perpetrator:Hackers] [*stole] [Goods:the passwords of millions of users].",
        "[Perpetrator:Someone] [*stole] [Goods:her purse] [Place:on the crowded tram].",
        "[Perpetrator:The clerk] [*stole] [Goods:cash] [Source:from the register] [Manner:quietly].",
        "[Goods:The crown jewels] were never [*stolen].",
        "[Perpetrator:The fox] [*stole] [Goods:three hens] [Source:from the farmer's coop].",
    ],
    "rob.v": [
        "[Perpetrator:Masked men] [*robbed] [Victim:the bank] [Time:at dawn].",
        "[Perpetrator:Bandits] [*robbed] [Victim:the travellers] [Goods:of their gold].",
        "[Victim:The elderly couple] were [*robbed] [Place:in broad daylight].",
        "[Perpetrator:Two teenagers] [*robbed] [Victim:a corner shop] [Place:downtown].",
    ],
    "rescue.v": [
        "[Agent:Firefighters] [*rescued] [Patient:a child] [Harmful_situation:from the burning house].",
        "[Agent:The coast guard] [*rescued] [Patient:six sailors] [Time:after two days adrift].",
        "[Patient:The miners] were [*rescued] [Agent:by a specialist team].",
        "[Agent:A passing fisherman] [*rescued] [Patient:the drowning swimmer].",
        "[Agent:Volunteers] [*rescued] [Patient:dozens of dogs] [Harmful_situation:from the flooded shelter] [Place:in the valley].",
        "[Agent:The lifeguard] [*rescued] [Patient:a surfer] [Means:with a jet ski].",
    ],
    "save.v": [
        "[Agent:The doctor] [*saved] [Patient:the baby] [Harmful_situation:from a deadly fever].",
        "[Agent:Her quick thinking] [*saved] [Patient:the whole crew].",
        "[Agent:A stranger] [*saved] [Patient:the boy] [Harmful_situation:from drowning] [Place:at the lake].",
    ],
}

_MARK = re.compile(r"\[(\*|[A-Za-z_]+:)([^\]]+)\]")
_NULL = re.compile(r"\s*\{([A-Za-z_]+)\}\s*$")


def parse_markup(marked):
    nulls = []
    while (m := _NULL.search(marked)):
        nulls.append(m.group(1))
        marked = marked[: m.start()]
    out, target, args, pos = [], None, [], 0
    for m in _MARK.finditer(marked):
        out.append(marked[pos:m.start()])
        start = sum(map(len, out))
        text = m.group(2)
        out.append(text)
        span = (start, start + len(text))
        if m.group(1) == "*":
            target = span
        else:
            args.append((m.group(1)[:-1], span))
        pos = m.end()
    out.append(marked[pos:])
    return "".join(out), target, args, nulls


def _check_grounding(sentence, target, args, order):
    # each gold span must be the leftmost occurrence that avoids spans grounded before it
    taken = []

    def leftmost(text):
        i = sentence.find(text)
        while i != -1:
            cand = (i, i + len(text))
            if all(cand[1] <= a or b <= cand[0] for a, b in taken):
                return cand
            i = sentence.find(text, i + 1)
        return None

    for span in [target] + [span for _, span in sorted(args, key=lambda a: order.index(a[0]))]:
        got = leftmost(sentence[span[0]:span[1]])
        assert got == span, (sentence, span, got)
        taken.append(span)


def _def_xml(text, example=None):
    body = f"<def-root>{text}"
    if example:
        body += f"\n<ex>{example}</ex>"
    return body + "</def-root>"


def build():
    ET.register_namespace("", NS)
    q = lambda tag: f"{{{NS}}}{tag}"
    (OUT / "frame").mkdir(parents=True, exist_ok=True)
    (OUT / "lu").mkdir(parents=True, exist_ok=True)
    sentences = set()
    lu_id, sent_id, anno_id = 100, 1000, 5000
    for fid, (fname, spec) in enumerate(FRAMES.items(), start=1):
        order = [e[0] for e in spec["elements"]]
        frame = ET.Element(q("frame"), {"name": fname, "ID": str(fid)})
        ET.SubElement(frame, q("definition")).text = _def_xml(spec["definition"], spec["example"])
        for i, (fe_name, core, definition) in enumerate(spec["elements"]):
            fe = ET.SubElement(frame, q("FE"), {"name": fe_name, "coreType": core, "ID": str(fid * 100 + i)})
            ET.SubElement(fe, q("definition")).text = _def_xml(definition)
        for lu_name in spec["lus"]:
            lu_id += 1
            ET.SubElement(frame, q("lexUnit"), {"name": lu_name, "ID": str(lu_id), "POS": "V"})
            lu = ET.Element(q("lexUnit"), {"name": lu_name, "frame": fname, "ID": str(lu_id), "POS": "V"})
            sub = ET.SubElement(lu, q("subCorpus"), {"name": "fixture"})
            for marked in EXAMPLES[lu_name]:
                sentence, target, args, nulls = parse_markup(marked)
                assert sentence not in sentences, sentence
                sentences.add(sentence)
                assert all(name in order for name, _ in args), marked
                core = [e[0] for e in spec["elements"] if e[1] == "Core"]
                _check_grounding(sentence, target, [a for a in args if a[0] in core], order)
                _check_grounding(sentence, target, args, order)
                sent_id += 1
                sent = ET.SubElement(sub, q("sentence"), {"ID": str(sent_id)})
                ET.SubElement(sent, q("text")).text = sentence
                anno_id += 1
                pos = ET.SubElement(sent, q("annotationSet"), {"ID": str(anno_id), "status": "UNANN"})
                ET.SubElement(pos, q("layer"), {"name": "PENN", "rank": "1"})
                anno_id += 1
                aset = ET.SubElement(sent, q("annotationSet"), {"ID": str(anno_id), "status": "MANUAL"})
                fe_layer = ET.SubElement(aset, q("layer"), {"name": "FE", "rank": "1"})
                for name, (s, e) in args:
                    ET.SubElement(fe_layer, q("label"), {"name": name, "start": str(s), "end": str(e - 1)})
                for name in nulls:
                    ET.SubElement(fe_layer, q("label"), {"name": name, "itype": "INI"})
                ET.SubElement(aset, q("layer"), {"name": "GF", "rank": "1"})
                tl = ET.SubElement(aset, q("layer"), {"name": "Target", "rank": "1"})
                ET.SubElement(tl, q("label"), {"name": "Target", "start": str(target[0]), "end": str(target[1] - 1)})
            ET.indent(lu)
            ET.ElementTree(lu).write(OUT / "lu" / f"lu{lu_id}.xml", encoding="UTF-8", xml_declaration=True)
        ET.indent(frame)
        ET.ElementTree(frame).write(OUT / "frame" / f"{fname}.xml", encoding="UTF-8", xml_declaration=True)
    print(f"wrote {len(FRAMES)} frames and {len(sentences)} examples to {OUT}")


if __name__ == "__main__":
    build()
