#!/usr/bin/env python3
"""Regenerates the synthetic interview corpus and scripted mock replies.

The transcripts are invented. Each participant mentions one distinctive
occupation so mock rules can route on it with "contains".
"""
import csv
import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent

# id, split, gold, occupation, mood lines
PEOPLE = [
    ("P301", "test", 3, "beekeeper", ["Work keeps me busy and I like it.", "I sleep fine most nights."]),
    ("P302", "test", 7, "locksmith", ["Some weeks are slow and I get a bit flat.", "My sister calls every Sunday."]),
    ("P303", "test", 12, "glassblower", ["I have been tired all the time lately.", "I stopped seeing my friends."]),
    ("P304", "test", 16, "ferry pilot", ["I can't really concentrate at work anymore.", "Most mornings I don't want to get up."]),
    ("P305", "test", 21, "night baker", ["I feel like I let everyone down.", "I barely eat and I wake up at four."]),
    ("P306", "test", 0, "surveyor", ["Honestly things are good right now.", "I run three times a week."]),
    ("P307", "test", 9, "upholsterer", ["I worry about money more than I should.", "But my partner is really supportive."]),
    ("P308", "test", 14, "piano tuner", ["Nothing feels fun the way it used to.", "I keep to myself these days."]),
    ("P309", "test", 18, "lighthouse keeper", ["I feel worthless most days.", "Since the divorce I hardly sleep."]),
    ("P310", "test", 5, "cartographer", ["I get stressed before deadlines.", "Cooking with my kids helps me unwind."]),
    ("P311", "train", 2, "tailor", ["I'm doing okay.", "I volunteer at the library."]),
    ("P312", "train", 11, "welder", ["Work has been rough and I feel drained.", "I snap at people."]),
    ("P313", "val", 6, "florist", ["Some days are harder than others.", "I have good neighbours."]),
]

# Scripted predictions: chain-of-thought is within one point of gold, the
# single-call baseline is three or four points off.
COT_SCORE = {"P301": 4, "P302": 7, "P303": 11, "P304": 16, "P305": 20, "P306": 1, "P307": 9,
             "P308": 13, "P309": 19, "P310": 5, "P311": 2, "P312": 12, "P313": 6}
STANDARD_SCORE = {"P301": 6, "P302": 4, "P303": 15, "P304": 12, "P305": 17, "P306": 3, "P307": 12,
                  "P308": 10, "P309": 14, "P310": 8, "P311": 5, "P312": 8, "P313": 9}


def write_corpus():
    root = HERE / "corpus"
    (root / "transcripts").mkdir(parents=True, exist_ok=True)
    with open(root / "labels.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["participant_id", "split", "phq8_score"])
        for pid, split, gold, *_ in PEOPLE:
            w.writerow([pid, split, gold])
    for i, (pid, _, _, job, lines) in enumerate(PEOPLE):
        turns = [
            ("Ellie", "hi, thanks for coming in today. how are you doing?"),
            ("Participant", "I'm alright I guess."),
            ("Ellie", "what do you do for work?"),
            ("Participant", f"I work as a {job}."),
            ("Ellie", "how have you been feeling lately?"),
            ("Participant", lines[0]),
            ("Ellie", "tell me more about that"),
            ("Participant", lines[1]),
        ]
        if i % 4 == 3:
            # A few plain-text transcripts: participant speech only.
            (root / "transcripts" / f"{pid}.txt").write_text(
                "\n".join(t for s, t in turns if s == "Participant") + "\n")
        else:
            with open(root / "transcripts" / f"{pid}.csv", "w", newline="") as f:
                w = csv.writer(f, lineterminator="\n")
                w.writerow(["speaker", "text"])
                w.writerows(turns)


def severity(score, verdict=None):
    body = {"phq8_score": score, "rationale": "scripted"}
    if verdict is not None:
        body = {"verdict": verdict, "phq8_score": score}
    return json.dumps(body)


def verdict_for(score):
    return "depressed" if score >= 10 else "not_depressed"


def write_mock():
    emotion = json.dumps({"signals": [
        {"kind": "sadness", "intensity": "medium", "polarity": "negative", "source": "internal_thoughts",
         "evidence": "how have you been feeling"},
        {"kind": "contentment", "intensity": "low", "polarity": "positive", "source": "relationships",
         "evidence": "tell me more"}]})
    contributing = json.dumps({"branch": "contributing", "factors": [
        {"dimension": "biological", "description": "poor sleep and fatigue", "evidence": "tired"},
        {"dimension": "social", "description": "withdrawal from friends", "evidence": "myself"}]})
    protective = json.dumps({"branch": "protective", "factors": [
        {"dimension": "social_support", "description": "supportive family", "evidence": "supportive"},
        {"dimension": "healthy_habits", "description": "regular exercise", "evidence": "run"}]})

    rules = [{"schema": "emotion.v1", "response": emotion}]
    for pid, _, gold, job, _ in PEOPLE:
        rules.append({"schema": "classification.v1", "contains": f"I work as a {job}.",
                      "response": json.dumps({"verdict": verdict_for(COT_SCORE[pid]),
                                              "rationale": "scripted", "confidence": 0.8})})
    rules.append({"schema": "reasoning.v1", "contains": "contributing factor analysis", "response": contributing})
    rules.append({"schema": "reasoning.v1", "contains": "protective factor analysis", "response": protective})
    for pid, _, gold, job, _ in PEOPLE:
        rules.append({"schema": "severity.v1", "mode": "cot", "contains": f"I work as a {job}.",
                      "response": severity(COT_SCORE[pid])})
        s = STANDARD_SCORE[pid]
        rules.append({"schema": "severity.v1", "mode": "standard", "contains": f"I work as a {job}.",
                      "response": severity(s, verdict_for(s))})
    (HERE / "mock").mkdir(exist_ok=True)
    (HERE / "mock" / "interviews.json").write_text(json.dumps({"rules": rules}, indent=2) + "\n")


if __name__ == "__main__":
    write_corpus()
    write_mock()
