"""Deterministic generator for the bundled pilot pack and knowledge base.

Ten scripted consultations over five scenario families (four chest-discomfort
cases, three upper-abdominal cases, three further risk-sensitive cases), with
gold audits sized 18 items / 14 structural slots / 6 risk items per script and
30 retrieval query points per script. All content is synthetic fixture data
shaped like consultation notes; none of it is clinical guidance.

Every byte of output is a pure function of the tables below: regenerating the
pack produces identical files.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

KB_HASH_SEED = 20260810
KB_DIM = 256

# Scripts whose exam responders ignore plain questions (the exam only happens
# when explicitly verified or recommended). The other scripts also accept ask.
STRICT_SCRIPTS = {"chest_02", "chest_04", "abdomen_02", "syncope_01", "fever_01"}

# Per-family content tables. Slot roles:
#   chief     - presenting complaint, first turn
#   late      - mandatory detail the patient only volunteers mid-script
#   risk1/2   - findings that fire the scenario risk rule
#   duration  - mandatory detail answered on request (value varies per script)
#   d2        - mandatory detail answered on request
#   d3        - mandatory detail; also arrives with the first exam report
#   verify1   - unconfirmed mention, confirmable on request (audited as risk)
#   verify2   - unconfirmed mention, confirmable only by explicit verification
#   exam1/2   - risk-rule exams; exam1 reports a result value and d3
FAMILIES: list[dict[str, Any]] = [
    {
        "key": "chest",
        "title": "Chest discomfort consultation",
        "scripts": ["chest_01", "chest_02", "chest_03", "chest_04"],
        "chief": ("chest_pain", "present", "I have been feeling a tight pressure in my chest."),
        "late": ("pain_location", "substernal", "The pressure sits right behind my breastbone."),
        "risk1": ("exertional_worsening", "present", "It clearly gets worse when I climb the stairs."),
        "risk2": ("radiation_left_arm", "present", "Sometimes the pressure spreads toward my left arm."),
        "duration": ("symptom_duration", ["3d", "5d", "2w", "1d"],
                     ["It started about three days ago.", "It started about five days ago.",
                      "It has been going on for two weeks.", "It only began yesterday."]),
        "d2": ("relieving_factors", "rest", "Resting for a few minutes usually makes it ease off."),
        "d3": ("resting_heart_rate", "88", "My pulse at rest has been around eighty-eight."),
        "verify1": ("lipid_history", "elevated",
                    "I think a blood test last year showed high cholesterol, but I am not certain.",
                    "The outside record confirms last year's lipid panel was elevated."),
        "verify2": ("blood_pressure_history", "elevated",
                    "Someone once said my blood pressure ran high, though nobody followed it up.",
                    "Clinic records verify earlier elevated blood pressure readings."),
        "negated": ("fever", "absent", "I have not had any fever with it."),
        "historical": ("prior_episode", "two_years_ago",
                       "I had a similar episode about two years ago that settled on its own."),
        "allergy": ("penicillin_allergy", "present", "Please note that I am allergic to penicillin."),
        "lifestyle": ("smoking_status", "current_smoker", "I smoke about ten cigarettes a day."),
        "ros1": ("dyspnea", "present", "I get a little short of breath when it happens."),
        "ros2": ("sleep_disturbance", "present", "The discomfort has been waking me at night lately."),
        "exam1": ("ecg", "ecg_result", ["st_depression", "t_wave_inversion", "st_depression",
                                        "nonspecific_changes"],
                  "Resting tracing completed. The tracing shows {result}. "
                  "Vitals with it put the resting pulse near eighty-eight."),
        "exam2": ("troponin", "Cardiac enzyme panel completed; the assay has been resulted."),
        "hypotheses": [("ischemic_strain", "Ischemic chest process"),
                       ("reflux_irritation", "Reflux-driven irritation"),
                       ("wall_strain", "Chest wall strain")],
        "rule": ("acute_chest_workup", 2.0),
        "exam1_text": "Twelve-lead resting tracing assessing electrical strain during chest "
                      "pressure episodes; ordered when exertional features appear.",
        "exam2_text": "Serial cardiac enzyme assay quantifying myocardial marker release.",
        "extra_exam": ("graded_stress_protocol",
                       "Graded treadmill stress protocol with staged workload monitoring."),
        "flavor": "pressure tightness exertion stairs arm jaw sweat",
    },
    {
        "key": "abdomen",
        "title": "Upper abdominal pain consultation",
        "scripts": ["abdomen_01", "abdomen_02", "abdomen_03"],
        "chief": ("epigastric_pain", "present", "There is a gnawing pain in my upper stomach."),
        "late": ("meal_relation", "post_meal", "The pain really flares up about an hour after meals."),
        "risk1": ("black_stool", "present", "My stool has looked black and tarry twice this week."),
        "risk2": ("persistent_vomiting", "present", "I have vomited nearly every evening as well."),
        "duration": ("symptom_duration", ["10d", "1w", "4d"],
                     ["This has gone on for about ten days.", "It has been about a week now.",
                      "Roughly four days, maybe five."]),
        "d2": ("appetite_change", "reduced", "My appetite has dropped; I leave half my plate."),
        "d3": ("hemoglobin_level", "low_normal", "The last fingerstick put my blood count at the low end."),
        "verify1": ("ulcer_history", "documented",
                    "A doctor mentioned an ulcer years back, but I never saw the report.",
                    "Archived endoscopy notes document a healed duodenal ulcer."),
        "verify2": ("analgesic_use", "frequent",
                    "I take over-the-counter pain tablets fairly often, I forget which kind.",
                    "The pharmacy log verifies frequent anti-inflammatory purchases."),
        "negated": ("jaundice", "absent", "Nobody has noticed any yellowing of my eyes or skin."),
        "historical": ("gastritis_episode", "three_years_ago",
                       "I was treated for stomach inflammation about three years ago."),
        "allergy": ("ibuprofen_intolerance", "present", "Ibuprofen upsets me badly, so I avoid it."),
        "lifestyle": ("alcohol_use", "weekly", "I drink a few beers on weekends."),
        "ros1": ("nausea", "present", "I feel queasy most mornings."),
        "ros2": ("early_satiety", "present", "I fill up after only a few bites."),
        "exam1": ("stool_occult_test", "occult_result", ["positive", "trace_positive", "positive"],
                  "Stool screen completed. The card reads {result}. The same draw put the "
                  "blood count at the low end of normal."),
        "exam2": ("abdominal_ultrasound", "Upper abdominal scan completed and imaged."),
        "hypotheses": [("bleeding_ulcer", "Bleeding ulcer process"),
                       ("gastritis_flare", "Gastritis flare"),
                       ("functional_dyspepsia", "Functional dyspepsia")],
        "rule": ("gi_bleed_workup", 2.0),
        "exam1_text": "Guaiac stool card screen detecting occult digestive tract blood loss.",
        "exam2_text": "Upper abdominal sonographic survey of wall thickening and fluid.",
        "extra_exam": ("breath_urease_screen", "Breath urease screen for mucosal organisms."),
        "flavor": "gnawing epigastric meals tarry stool vomit burning",
    },
    {
        "key": "syncope",
        "title": "Recurrent fainting consultation",
        "scripts": ["syncope_01"],
        "chief": ("syncope_episode", "present", "I have blacked out twice in the past month."),
        "late": ("event_setting", "standing", "Both spells hit while I was standing in a queue."),
        "risk1": ("exertional_onset", "present", "The second one came on right after jogging."),
        "risk2": ("family_sudden_death", "present", "An uncle died suddenly in his forties."),
        "duration": ("symptom_duration", ["1m"], ["The spells began about a month ago."]),
        "d2": ("prodrome", "none", "There is no warning at all before I go down."),
        "d3": ("resting_pulse", "54", "My smart watch says my pulse dips into the mid-fifties."),
        "verify1": ("palpitation_history", "documented",
                    "A walk-in clinic once mentioned an irregular beat, I never followed up.",
                    "The walk-in record documents a brief irregular rhythm strip."),
        "verify2": ("medication_review", "diuretic_use",
                    "I take a water pill my cousin gave me, not sure of the name.",
                    "The dispensing history verifies regular diuretic use."),
        "negated": ("seizure_activity", "absent", "Nobody has seen any shaking or seizure with these."),
        "historical": ("childhood_faint", "remote", "I fainted once as a child during a vaccination."),
        "allergy": ("contrast_dye_allergy", "present", "Imaging dye gave me hives once."),
        "lifestyle": ("hydration_habits", "low_intake", "I barely drink water during shifts."),
        "ros1": ("palpitations", "present", "My heart sometimes flutters for a few seconds."),
        "ros2": ("morning_fatigue", "present", "I wake up drained most mornings."),
        "exam1": ("cardiac_monitor", "monitor_result", ["pauses_detected"],
                  "Ambulatory rhythm recording completed. The strip shows {result}. "
                  "Baseline pulse logged in the mid-fifties."),
        "exam2": ("orthostatic_vitals", "Lying and standing pressure series completed."),
        "hypotheses": [("rhythm_disturbance", "Rhythm disturbance"),
                       ("reflex_faint", "Reflex faint"),
                       ("volume_depletion", "Volume depletion")],
        "rule": ("arrhythmia_workup", 2.0),
        "exam1_text": "Multi-day ambulatory rhythm recording capturing pauses and runs.",
        "exam2_text": "Paired lying and standing pressure measurements for drop assessment.",
        "extra_exam": ("tilt_table_study", "Passive tilt provocation study with monitoring."),
        "flavor": "blackout faint standing jogging rhythm flutter",
    },
    {
        "key": "headache",
        "title": "Severe headache consultation",
        "scripts": ["headache_01"],
        "chief": ("severe_headache", "present", "A crushing headache has taken over the past days."),
        "late": ("onset_speed", "sudden", "It reached full force within a minute of starting."),
        "risk1": ("neck_stiffness", "present", "My neck has been stiff enough to limit turning."),
        "risk2": ("vision_change", "present", "There are moments where my vision doubles briefly."),
        "duration": ("symptom_duration", ["2d"], ["It began two days ago."]),
        "d2": ("light_sensitivity", "present", "Bright light makes it dramatically worse."),
        "d3": ("temperature_reading", "37_8", "My home thermometer read close to thirty-eight."),
        "verify1": ("migraine_history", "documented",
                    "Someone once called these migraines, though I never had imaging.",
                    "Prior neurology notes document an established migraine pattern."),
        "verify2": ("anticoagulant_use", "confirmed_use",
                    "I might still be on that blood thinner from my leg clot last year.",
                    "The medication registry verifies an active anticoagulant prescription."),
        "negated": ("limb_weakness", "absent", "My arms and legs feel as strong as ever."),
        "historical": ("tension_headaches", "years",
                       "I have carried ordinary tension headaches for years."),
        "allergy": ("codeine_reaction", "present", "Codeine once made me vomit for a day."),
        "lifestyle": ("screen_time", "high", "I am on screens ten hours a day for work."),
        "ros1": ("visual_aura", "present", "Zigzag lines sometimes drift across my sight first."),
        "ros2": ("jaw_discomfort", "present", "Chewing tires my jaw out oddly."),
        "exam1": ("head_imaging", "imaging_result", ["no_bleed_seen"],
                  "Cranial scan completed. The read reports {result}. The visit vitals "
                  "logged a temperature close to thirty-eight."),
        "exam2": ("inflammatory_markers", "Inflammatory marker panel drawn and resulted."),
        "hypotheses": [("pressure_process", "Intracranial pressure process"),
                       ("classic_migraine", "Classic migraine"),
                       ("tension_pattern", "Tension pattern")],
        "rule": ("urgent_head_review", 2.0),
        "exam1_text": "Non-contrast cranial scan excluding bleed and mass effect.",
        "exam2_text": "Serum inflammatory marker panel for vasculitic screening.",
        "extra_exam": ("vision_field_test", "Formal visual field mapping across quadrants."),
        "flavor": "crushing sudden stiff neck vision double light",
    },
    {
        "key": "fever",
        "title": "Febrile cough consultation",
        "scripts": ["fever_01"],
        "chief": ("productive_cough", "present", "I cannot stop coughing up thick phlegm."),
        "late": ("sputum_color", "rusty", "The phlegm has turned a rusty colour."),
        "risk1": ("high_fever", "present", "My fever spiked over thirty-nine last night."),
        "risk2": ("pleuritic_pain", "present", "A sharp pain stabs my side on deep breaths."),
        "duration": ("symptom_duration", ["5d"], ["This is the fifth day of it."]),
        "d2": ("chills", "present", "The shaking chills come in waves at night."),
        "d3": ("oxygen_reading", "94", "The drugstore oximeter showed ninety-four percent."),
        "verify1": ("vaccination_status", "documented",
                    "I believe I had the seasonal shot, though I lost the card.",
                    "The immunization registry documents this season's vaccination."),
        "verify2": ("recent_travel", "regional_trip",
                    "I did travel upcountry two weeks ago, if that matters.",
                    "The itinerary verifies a regional trip two weeks back."),
        "negated": ("hemoptysis", "absent", "There has been no blood in anything I cough up."),
        "historical": ("childhood_asthma", "remote", "I had mild asthma as a child that faded."),
        "allergy": ("sulfa_allergy", "present", "Sulfa drugs give me a rash."),
        "lifestyle": ("occupational_dust", "present", "My workshop is full of sawdust all day."),
        "ros1": ("exertional_breathlessness", "present", "Stairs leave me winded lately."),
        "ros2": ("appetite_loss", "present", "Food has lost all appeal this week."),
        "exam1": ("chest_imaging", "imaging_finding", ["right_lower_opacity"],
                  "Chest film completed. The read reports {result}. Clinic oximetry "
                  "matched the home reading at ninety-four percent."),
        "exam2": ("sputum_culture", "Sputum specimen plated for culture and resulted."),
        "hypotheses": [("lobar_infection", "Lobar lung infection"),
                       ("viral_bronchitis", "Viral bronchitis"),
                       ("airway_inflammation", "Airway inflammation")],
        "rule": ("pneumonia_escalation", 2.0),
        "exam1_text": "Two-view chest film assessing focal air-space opacity.",
        "exam2_text": "Expectorated sputum culture with organism identification.",
        "extra_exam": ("clot_marker_assay", "Plasma clot marker assay for embolic screening."),
        "flavor": "cough phlegm fever spike stabbing breath chills",
    },
]


def _slot(spec, key: str) -> str:
    return spec[key][0]


def _value(spec, key: str) -> str:
    return spec[key][1]


def _sentence(spec, key: str) -> str:
    return spec[key][2]


def _scenario_sections(spec) -> list[dict[str, Any]]:
    """Slot table with section, mandatory and risk flags."""
    exam1, result_slot = spec["exam1"][0], spec["exam1"][1]
    exam2 = spec["exam2"][0]
    rows = [
        (_slot(spec, "chief"), "HPI", True, False),
        (_slot(spec, "late"), "HPI", True, False),
        (spec["duration"][0], "HPI", True, False),
        (_slot(spec, "d2"), "HPI", True, False),
        (_slot(spec, "historical"), "HPI", False, False),
        (_slot(spec, "lifestyle"), "HPI", False, False),
        (_slot(spec, "risk1"), "ROS", False, True),
        (_slot(spec, "risk2"), "ROS", False, True),
        (_slot(spec, "negated"), "ROS", False, False),
        (_slot(spec, "ros1"), "ROS", False, False),
        (_slot(spec, "ros2"), "ROS", False, False),
        (_slot(spec, "d3"), "ROS", True, False),
        (exam1, "Plan", True, True),
        (result_slot, "Plan", False, True),
        (exam2, "Plan", True, True),
        (_slot(spec, "allergy"), "Plan", False, False),
        (spec["verify1"][0], "Plan", False, False),
        (spec["verify2"][0], "Plan", False, True),
    ]
    return [
        {"slot_id": s, "section": sec, "mandatory": m, "risk_flag": r}
        for s, sec, m, r in rows
    ]


def _span_events(sentences: list[tuple[str, dict[str, Any] | None]]):
    """Join sentences into turn text, computing one event span per sentence."""
    text_parts: list[str] = []
    events: list[dict[str, Any]] = []
    offset = 0
    for sentence, seed in sentences:
        if text_parts:
            offset += 1  # joining space
        start = offset
        end = start + len(sentence)
        if seed is not None:
            events.append({**seed, "char_start": start, "char_end": end})
        text_parts.append(sentence)
        offset = end
    return " ".join(text_parts), events


def _seed(slot: str, value: str, state: str, temporality: str = "present",
          role: str | None = None) -> dict[str, Any]:
    out = {"field_id": slot, "value": value, "state": state, "temporality": temporality}
    if role:
        out["role"] = role
    return out


def _script_turns(spec, variant: int) -> list[dict[str, Any]]:
    dur_slot, dur_values, dur_sentences = spec["duration"]
    layout = [
        [("Thanks for seeing me. " + _sentence(spec, "chief"), _seed(_slot(spec, "chief"), _value(spec, "chief"), "observed_result"))],
        [(_sentence(spec, "allergy"), _seed(_slot(spec, "allergy"), _value(spec, "allergy"), "observed_result"))],
        [(_sentence(spec, "risk1"), _seed(_slot(spec, "risk1"), _value(spec, "risk1"), "observed_result")),
         (_sentence(spec, "risk2"), _seed(_slot(spec, "risk2"), _value(spec, "risk2"), "observed_result"))],
        [(_sentence(spec, "late"), _seed(_slot(spec, "late"), _value(spec, "late"), "observed_result")),
         (spec["verify2"][2], _seed(spec["verify2"][0], spec["verify2"][1], "unconfirmed"))],
        [(spec["verify1"][2], _seed(spec["verify1"][0], spec["verify1"][1], "unconfirmed")),
         (_sentence(spec, "negated"), _seed(_slot(spec, "negated"), _value(spec, "negated"), "negated"))],
        [(_sentence(spec, "historical"), _seed(_slot(spec, "historical"), _value(spec, "historical"), "historical_result", "past")),
         (_sentence(spec, "lifestyle"), _seed(_slot(spec, "lifestyle"), _value(spec, "lifestyle"), "observed_result")),
         (_sentence(spec, "ros1"), _seed(_slot(spec, "ros1"), _value(spec, "ros1"), "observed_result"))],
        [("It has started to weigh on me at work, to be honest.", None)],
        [("My family keeps asking whether we know anything yet.", None)],
        [("One more thing I nearly forgot.", None),
         (_sentence(spec, "ros2"), _seed(_slot(spec, "ros2"), _value(spec, "ros2"), "observed_result"))],
        [("Whatever you think is sensible next, I will follow.", None)],
    ]
    turns = []
    for idx, sentence_specs in enumerate(layout):
        text, events = _span_events(sentence_specs)
        turns.append({"turn_index": idx, "speaker": "patient", "text": text, "events": events})
    return turns


def _responders(spec, variant: int, strict: bool) -> list[dict[str, Any]]:
    dur_slot, dur_values, dur_sentences = spec["duration"]
    exam1, result_slot, result_values, exam1_report = spec["exam1"]
    exam2, exam2_report = spec["exam2"]
    d3_slot, d3_value, d3_sentence = spec["d3"]
    exam_verbs = ["verify", "recommend_exam"] if strict else ["ask", "verify", "recommend_exam"]

    def responder(verbs, slot, speaker, sentences):
        text, events = _span_events(sentences)
        return {"verbs": verbs, "slot": slot, "speaker": speaker, "text": text,
                "events": events}

    exam1_text = exam1_report.format(result=result_values[variant].replace("_", " "))
    return [
        responder(["ask"], dur_slot, "patient",
                  [(dur_sentences[variant], _seed(dur_slot, dur_values[variant], "observed_result"))]),
        responder(["ask"], _slot(spec, "d2"), "patient",
                  [(_sentence(spec, "d2"), _seed(_slot(spec, "d2"), _value(spec, "d2"), "observed_result"))]),
        responder(["ask"], d3_slot, "patient",
                  [(d3_sentence, _seed(d3_slot, d3_value, "observed_result"))]),
        responder(["ask"], spec["verify1"][0], "report",
                  [(spec["verify1"][3], _seed(spec["verify1"][0], spec["verify1"][1], "confirmed", "past", "report"))]),
        responder(["verify"], spec["verify2"][0], "report",
                  [(spec["verify2"][3], _seed(spec["verify2"][0], spec["verify2"][1], "confirmed", "past", "report"))]),
        responder(exam_verbs, exam1, "report",
                  [(exam1_text,
                    _seed(exam1, "done", "completed", "present", "report")),
                   ("Linked observations follow.",
                    _seed(result_slot, result_values[variant], "observed_result", "present", "report")),
                   ("Supplementary vitals were recorded with the study.",
                    _seed(d3_slot, d3_value, "observed_result", "present", "report"))]),
        responder(exam_verbs, exam2, "report",
                  [(exam2_report, _seed(exam2, "done", "completed", "present", "report"))]),
    ]


def _likelihoods(spec, variant: int) -> dict[str, Any]:
    h1, h2, h3 = (h[0] for h in spec["hypotheses"])
    dur_slot, dur_values, _ = spec["duration"]
    exam1, result_slot, result_values, _ = spec["exam1"]

    def rows(slot, value, state, p1, p2, p3):
        return [
            {"hypothesis": h1, "slot": slot, "value": value, "state": state, "likelihood": p1},
            {"hypothesis": h2, "slot": slot, "value": value, "state": state, "likelihood": p2},
            {"hypothesis": h3, "slot": slot, "value": value, "state": state, "likelihood": p3},
        ]

    entries = []
    entries += rows(_slot(spec, "chief"), _value(spec, "chief"), "observed_result", 0.70, 0.60, 0.50)
    entries += rows(_slot(spec, "risk1"), _value(spec, "risk1"), "observed_result", 0.80, 0.30, 0.25)
    entries += rows(_slot(spec, "risk2"), _value(spec, "risk2"), "observed_result", 0.75, 0.35, 0.30)
    entries += rows(dur_slot, dur_values[variant], "observed_result", 0.60, 0.50, 0.45)
    entries += rows(_slot(spec, "late"), _value(spec, "late"), "observed_result", 0.65, 0.45, 0.40)
    entries += rows(result_slot, result_values[variant], "observed_result", 0.85, 0.20, 0.15)
    entries += rows(spec["verify2"][0], spec["verify2"][1], "confirmed", 0.70, 0.45, 0.40)
    return {"default_likelihood": 0.5, "entries": entries}


def _outcomes(spec) -> dict[str, Any]:
    h1, h2, h3 = (h[0] for h in spec["hypotheses"])
    dur_slot = spec["duration"][0]
    exam1 = spec["exam1"][0]
    exam2 = spec["exam2"][0]

    def binary(action, p1, p2, p3):
        return {
            "action": action,
            "outcomes": [
                {"outcome_id": "yes", "likelihoods": {h1: p1, h2: p2, h3: p3}},
                {"outcome_id": "no",
                 "likelihoods": {h1: round(1 - p1, 9), h2: round(1 - p2, 9), h3: round(1 - p3, 9)}},
            ],
        }

    return {"actions": [
        binary(f"ask:{_slot(spec, 'late')}", 0.95, 0.30, 0.15),
        binary(f"ask:{dur_slot}", 0.90, 0.40, 0.20),
        binary(f"ask:{_slot(spec, 'd2')}", 0.85, 0.45, 0.25),
        binary(f"ask:{_slot(spec, 'd3')}", 0.80, 0.50, 0.30),
        binary(f"ask:{exam1}", 0.60, 0.45, 0.35),
        binary(f"ask:{exam2}", 0.55, 0.45, 0.40),
        binary(f"verify:{spec['verify2'][0]}", 0.75, 0.40, 0.30),
        binary(f"recommend_exam:{exam1}", 0.85, 0.25, 0.15),
        binary(f"recommend_exam:{exam2}", 0.70, 0.40, 0.30),
    ]}


def _scenario(spec, script_id: str, variant: int, strict: bool) -> dict[str, Any]:
    h = spec["hypotheses"]
    exam1 = spec["exam1"][0]
    exam2 = spec["exam2"][0]
    rule_id, severity = spec["rule"]
    return {
        "scenario_id": script_id,
        "title": f"{spec['title']} ({script_id})",
        "sections": ["HPI", "ROS", "Plan", "Risk"],
        "slots": _scenario_sections(spec),
        "risk_rules": [{
            "rule_id": rule_id,
            "antecedent": [
                {"slot": _slot(spec, "chief"), "min_weight": 1.0},
                {"slot": _slot(spec, "risk1"), "min_weight": 1.0},
            ],
            "unresolved": [exam1, exam2],
            "severity": severity,
            "threshold": 0.7,
        }],
        "hypotheses": [
            {"hypothesis_id": h[0][0], "label": h[0][1], "prior": 0.45},
            {"hypothesis_id": h[1][0], "label": h[1][1], "prior": 0.30},
            {"hypothesis_id": h[2][0], "label": h[2][1], "prior": 0.25},
        ],
        "likelihoods": _likelihoods(spec, variant),
        "outcomes": _outcomes(spec),
        "checklist": [
            _slot(spec, "chief"), spec["duration"][0], _slot(spec, "d2"),
            _slot(spec, "d3"), spec["verify1"][0], _slot(spec, "allergy"),
            exam1, exam2,
        ],
        "responder": _responders(spec, variant, strict),
    }


def _gold(spec, variant: int) -> dict[str, Any]:
    dur_slot, dur_values, _ = spec["duration"]
    exam1, result_slot, result_values, _ = spec["exam1"]
    exam2 = spec["exam2"][0]

    def item(slot, value, status, temporality="present", assertion="positive", risk=False):
        return {"slot": slot, "value": value, "status": status,
                "temporality": temporality, "assertion": assertion, "risk_flag": risk}

    items = [
        item(_slot(spec, "chief"), _value(spec, "chief"), "observed_result"),
        item(_slot(spec, "allergy"), _value(spec, "allergy"), "observed_result"),
        item(_slot(spec, "risk1"), _value(spec, "risk1"), "observed_result", risk=True),
        item(_slot(spec, "risk2"), _value(spec, "risk2"), "observed_result", risk=True),
        item(_slot(spec, "late"), _value(spec, "late"), "observed_result"),
        item(_slot(spec, "negated"), _value(spec, "negated"), "negated", assertion="negative"),
        item(_slot(spec, "historical"), _value(spec, "historical"), "historical_result", "past"),
        item(_slot(spec, "lifestyle"), _value(spec, "lifestyle"), "observed_result"),
        item(_slot(spec, "ros1"), _value(spec, "ros1"), "observed_result"),
        item(_slot(spec, "ros2"), _value(spec, "ros2"), "observed_result"),
        item(dur_slot, dur_values[variant], "observed_result"),
        item(_slot(spec, "d2"), _value(spec, "d2"), "observed_result"),
        item(_slot(spec, "d3"), _value(spec, "d3"), "observed_result"),
        item(spec["verify1"][0], spec["verify1"][1], "confirmed", "past", risk=True),
        item(spec["verify2"][0], spec["verify2"][1], "confirmed", "past"),
        item(exam1, "done", "completed", risk=True),
        item(result_slot, result_values[variant], "observed_result", risk=True),
        item(exam2, "done", "completed", risk=True),
    ]
    required = [
        _slot(spec, "chief"), _slot(spec, "allergy"), _slot(spec, "risk1"),
        _slot(spec, "risk2"), _slot(spec, "late"), _slot(spec, "negated"),
        _slot(spec, "historical"), dur_slot, _slot(spec, "d2"), _slot(spec, "d3"),
        spec["verify1"][0], exam1, result_slot, exam2,
    ]
    return {"items": items, "required_slots": required}


# -- knowledge base ----------------------------------------------------------


def _kb_objects_for(spec) -> list[dict[str, Any]]:
    key = spec["key"]
    chief, risk1, risk2, ros1 = (_slot(spec, k) for k in ("chief", "risk1", "risk2", "ros1"))
    dur = spec["duration"][0]
    d2 = _slot(spec, "d2")
    exam1, result_slot = spec["exam1"][0], spec["exam1"][1]
    exam2 = spec["exam2"][0]
    rule_id = spec["rule"][0]
    verify1 = spec["verify1"][0]
    h1, h2, h3 = (h for h in spec["hypotheses"])
    flavor = spec["flavor"]
    extra_slot, extra_text = spec["extra_exam"]

    def words(slot: str) -> str:
        return slot.replace("_", " ")

    return [
        {"object_id": f"{key}.sym.{chief}", "kind": "symptom_unit",
         "fields": {"slot": chief, "expects": [dur, d2, _slot(spec, "late")],
                    "addresses": [chief, dur]},
         "text": f"Presenting pattern: {words(chief)}. Typical qualifiers: {flavor}. "
                 f"Charting expects {words(dur)} and {words(d2)}."},
        {"object_id": f"{key}.sym.{risk1}", "kind": "symptom_unit",
         "fields": {"slot": risk1, "addresses": [risk1]},
         "text": f"Alarm feature: {words(risk1)} accompanying {words(chief)}. "
                 f"Raises escalation concern. {flavor}."},
        {"object_id": f"{key}.sym.{risk2}", "kind": "symptom_unit",
         "fields": {"slot": risk2, "addresses": [risk2]},
         "text": f"Alarm feature: {words(risk2)} reported alongside {words(chief)}."},
        {"object_id": f"{key}.sym.{ros1}", "kind": "symptom_unit",
         "fields": {"slot": ros1, "addresses": [ros1]},
         "text": f"Supporting review finding: {words(ros1)} in the same episode cluster."},
        {"object_id": f"{key}.dx.{h1[0]}", "kind": "diagnosis_unit",
         "fields": {"hypothesis": h1[0], "requires": [f"{risk1}:observed_result"],
                    "addresses": []},
         "text": f"Working explanation: {h1[1].lower()}. Supported by {words(risk1)} and "
                 f"{words(chief)}; clarified by {words(exam1)} and {words(exam2)}."},
        {"object_id": f"{key}.dx.{h2[0]}", "kind": "diagnosis_unit",
         "fields": {"hypothesis": h2[0], "requires": [f"{chief}:observed_result"],
                    "addresses": []},
         "text": f"Alternative explanation: {h2[1].lower()} presenting with {words(chief)}."},
        {"object_id": f"{key}.dx.{h3[0]}", "kind": "diagnosis_unit",
         "fields": {"hypothesis": h3[0], "requires": [f"{chief}:observed_result"],
                    "addresses": []},
         "text": f"Benign explanation: {h3[1].lower()} without alarm features."},
        {"object_id": f"{key}.exam.{exam1}", "kind": "exam_unit",
         "fields": {"slot": exam1, "discharges": [rule_id], "precondition_slot": exam1,
                    "addresses": [exam1], "expects": [exam1, result_slot]},
         "text": f"{words(exam1)} study. {spec['exam1_text']} Chart the {words(exam1)} "
                 f"order and completion status for {words(chief)} review."},
        {"object_id": f"{key}.exam.{exam2}", "kind": "exam_unit",
         "fields": {"slot": exam2, "discharges": [rule_id], "precondition_slot": exam2,
                    "addresses": [exam2], "expects": [exam2]},
         "text": f"{words(exam2)} study. {spec['exam2_text']} Chart the {words(exam2)} "
                 f"order and completion status."},
        {"object_id": f"{key}.exam.{extra_slot}", "kind": "exam_unit",
         "fields": {"slot": extra_slot, "addresses": [extra_slot]},
         "text": f"{extra_text} Second-line study."},
        {"object_id": f"{key}.rule.{rule_id}", "kind": "risk_rule_unit",
         "fields": {"rule": rule_id, "addresses": [exam1, exam2],
                    "requires": [f"{risk1}:observed_result"]},
         "text": f"Escalation protocol {words(rule_id)}: once {words(risk1)} is observed "
                 f"with {words(chief)}, resolve {words(exam1)} and {words(exam2)}."},
        {"object_id": f"{key}.rule.confirm_{verify1}", "kind": "risk_rule_unit",
         "fields": {"addresses": [verify1], "requires": [f"{verify1}:unconfirmed"]},
         "text": f"Verification protocol: confirm {words(verify1)} against outside "
                 f"records before planning."},
        {"object_id": f"{key}.case.managed_{h1[0]}", "kind": "case_summary",
         "fields": {"requires": [f"{exam1}:completed"], "addresses": [exam2]},
         "text": f"Worked case: {words(chief)} with {words(risk1)}, resolved after "
                 f"{words(exam1)} completion clarified {h1[1].lower()}; "
                 f"{words(exam2)} closed the loop."},
        {"object_id": f"{key}.case.benign_{h3[0]}", "kind": "case_summary",
         "fields": {"addresses": []},
         "text": f"Worked case: isolated {words(chief)} settling without escalation; "
                 f"{h3[1].lower()} pattern."},
    ]


def _kb_edges_for(spec) -> list[dict[str, Any]]:
    key = spec["key"]
    chief, risk1, risk2 = (_slot(spec, k) for k in ("chief", "risk1", "risk2"))
    exam1, exam2 = spec["exam1"][0], spec["exam2"][0]
    rule_id = spec["rule"][0]
    verify1 = spec["verify1"][0]
    h1, h2, h3 = (h[0] for h in spec["hypotheses"])
    extra = spec["extra_exam"][0]

    def edge(src, dst, relation, cost):
        return {"src": f"{key}.{src}", "dst": f"{key}.{dst}", "relation": relation, "cost": cost}

    return [
        edge(f"sym.{chief}", f"dx.{h1}", "suggests", 1.0),
        edge(f"sym.{chief}", f"dx.{h2}", "suggests", 1.2),
        edge(f"sym.{chief}", f"dx.{h3}", "suggests", 1.4),
        edge(f"sym.{risk1}", f"dx.{h1}", "suggests", 0.8),
        edge(f"sym.{risk2}", f"dx.{h1}", "suggests", 0.9),
        edge(f"sym.{risk1}", f"rule.{rule_id}", "triggers", 0.6),
        edge(f"sym.{risk2}", f"rule.{rule_id}", "triggers", 0.7),
        edge(f"rule.{rule_id}", f"exam.{exam1}", "requires", 0.5),
        edge(f"rule.{rule_id}", f"exam.{exam2}", "requires", 0.6),
        # direct diagnosis-to-exam hops are deliberately costly so exam paths
        # only score well once the cheap risk-rule route is anchored
        edge(f"dx.{h1}", f"exam.{exam1}", "confirmed_by", 1.6),
        edge(f"dx.{h1}", f"exam.{exam2}", "confirmed_by", 1.8),
        edge(f"dx.{h2}", f"exam.{extra}", "confirmed_by", 1.7),
        edge(f"dx.{h3}", f"exam.{extra}", "confirmed_by", 1.9),
        edge(f"dx.{h1}", f"case.managed_{h1}", "illustrated_by", 0.9),
        edge(f"dx.{h2}", f"case.benign_{h3}", "illustrated_by", 1.0),
        edge(f"sym.{chief}", f"rule.confirm_{verify1}", "prompts", 1.0),
        edge(f"exam.{exam1}", f"dx.{h1}", "informs", 0.8),
    ]


# -- retrieval query points ---------------------------------------------------


def _queries_for(spec, script_id: str, variant: int) -> list[dict[str, Any]]:
    key = spec["key"]
    chief, risk1, risk2, ros1 = (_slot(spec, k) for k in ("chief", "risk1", "risk2", "ros1"))
    late = _slot(spec, "late")
    d2 = _slot(spec, "d2")
    dur_slot, dur_values, _ = spec["duration"]
    exam1, exam2 = spec["exam1"][0], spec["exam2"][0]
    rule_id = spec["rule"][0]
    verify1 = spec["verify1"][0]
    h1, h2, h3 = (h[0] for h in spec["hypotheses"])

    def entry(slot, value, state="observed_result"):
        return {"slot": slot, "value": value, "state": state}

    base_entries = {
        "chief": entry(chief, _value(spec, "chief")),
        "risk1": entry(risk1, _value(spec, "risk1")),
        "risk2": entry(risk2, _value(spec, "risk2")),
        "ros1": entry(ros1, _value(spec, "ros1")),
        "late": entry(late, _value(spec, "late")),
        "d2": entry(d2, _value(spec, "d2")),
        "duration": entry(dur_slot, dur_values[variant]),
    }
    context_variants = [[], ["ros1"], ["late"], ["d2"], ["duration"]]
    # for exam-centred query types, some variants add anchored findings so
    # reasoning paths come back into play
    anchored_variants = [[], ["duration"], ["late"], ["chief"], ["chief", "risk1"]]

    types = [
        ("risk_escalation", True,
         ["chief", "risk1", "risk2"], context_variants,
         [f"{key}.exam.{exam1}", f"{key}.rule.{rule_id}"],
         [[f"{key}.sym.{risk1}", f"{key}.dx.{h1}", f"{key}.exam.{exam1}"],
          [f"{key}.sym.{risk1}", f"{key}.rule.{rule_id}", f"{key}.exam.{exam1}"]]),
        ("completion_status", False,
         [], anchored_variants,
         [f"{key}.exam.{exam2}"],
         [[f"{key}.rule.{rule_id}", f"{key}.exam.{exam2}"]],
         [entry(exam2, "advised", "recommended")]),
        ("duration_followup", True,
         ["chief"], context_variants,
         [f"{key}.sym.{chief}"],
         [[f"{key}.sym.{chief}", f"{key}.dx.{h1}"]]),
        ("verification", True,
         ["chief"], context_variants,
         [f"{key}.rule.confirm_{verify1}"],
         [[f"{key}.sym.{chief}", f"{key}.rule.confirm_{verify1}"]],
         [entry(verify1, spec["verify1"][1], "unconfirmed")]),
        ("differential", False,
         ["chief", "d2"], context_variants,
         [f"{key}.dx.{h2}"],
         [[f"{key}.sym.{chief}", f"{key}.dx.{h2}"]]),
        ("plan_guidance", False,
         ["d2"], anchored_variants,
         [f"{key}.case.managed_{h1}"],
         [[f"{key}.dx.{h1}", f"{key}.case.managed_{h1}"]],
         [entry(exam1, "done", "completed")]),
    ]

    queries = []
    n = 0
    for name, risk_critical, state_keys, variants, gold_objects, gold_paths, *rest in types:
        extra = rest[0] if rest else []
        for extras in variants:
            state = [base_entries[k] for k in state_keys]
            state += [base_entries[k] for k in extras if k not in state_keys]
            state += extra
            queries.append({
                "query_id": f"{script_id}_q{n:02d}",
                "scenario_id": script_id,
                "type": name,
                "state": state,
                "gold_objects": gold_objects,
                "gold_paths": gold_paths,
                "risk_critical": risk_critical,
            })
            n += 1
    return queries


# -- top-level writers ---------------------------------------------------------


def _dump_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _dump_jsonl(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def build_kb(out_dir: Path) -> None:
    objects: list[dict[str, Any]] = []
    edges: list[dict[str, Any]] = []
    for spec in FAMILIES:
        objects.extend(_kb_objects_for(spec))
        edges.extend(_kb_edges_for(spec))
    objects.sort(key=lambda o: o["object_id"])
    edges.sort(key=lambda e: (e["src"], e["dst"], e["relation"]))
    _dump_jsonl(out_dir / "objects.jsonl", objects)
    _dump_jsonl(out_dir / "edges.jsonl", edges)
    _dump_json(out_dir / "manifest.json", {
        "dim": KB_DIM,
        "hash_name": "blake2b64",
        "hash_seed": KB_HASH_SEED,
        "alpha": [0.20, 0.10, 0.10, 0.20, 0.20, 0.10, 0.10],
        "beta": [0.3, 0.4, 0.3],
        "rho": 0.25,
        "coarse_k": 50,
        "rerank_k": 20,
        "max_path_len": 4,
        "path_source": "rerank",
        "paths_per_object": 5,
        "objects": len(objects),
        "edges": len(edges),
    })


def build_pack(out_dir: Path) -> None:
    scenarios = []
    script_index = []
    all_queries: list[dict[str, Any]] = []
    gold_total = risk_total = structural_total = 0

    for spec in FAMILIES:
        for variant, script_id in enumerate(spec["scripts"]):
            strict = script_id in STRICT_SCRIPTS
            scenarios.append(_scenario(spec, script_id, variant, strict))
            script_index.append({"script_id": script_id, "scenario_id": script_id})
            _dump_jsonl(out_dir / "scripts" / f"{script_id}.jsonl",
                        _script_turns(spec, variant))
            gold = _gold(spec, variant)
            _dump_json(out_dir / "gold" / f"{script_id}.json", gold)
            gold_total += len(gold["items"])
            risk_total += sum(1 for i in gold["items"] if i["risk_flag"])
            structural_total += len(gold["required_slots"])
            all_queries.extend(_queries_for(spec, script_id, variant))

    _dump_json(out_dir / "scenarios.json", {"scenarios": scenarios})
    _dump_jsonl(out_dir / "queries.jsonl", all_queries)

    rules = []
    for spec in FAMILIES:
        chief_slot, chief_value, chief_sentence = spec["chief"]
        trigger = chief_sentence.rstrip(".").split(". ")[-1].lower()
        rules.append({
            "rule_id": f"rule_{spec['key']}_chief",
            "trigger": trigger,
            "field_id": chief_slot,
            "value": chief_value,
            "state": "observed_result",
            "temporality": "present",
            "priority": 0,
        })
    _dump_json(out_dir / "rules.json", {"rules": rules})

    risk_queries = sum(1 for q in all_queries if q["risk_critical"])
    _dump_json(out_dir / "manifest.json", {
        "pack_id": "pilot_pack",
        "v": 1,
        "extraction_mode": "gold",
        "scripts": script_index,
        "counts": {
            "scripts": len(script_index),
            "gold_items": gold_total,
            "risk_items": risk_total,
            "structural_slots": structural_total,
            "query_points": len(all_queries),
        },
        "notes": {
            "synthetic": "All content is synthetic fixture data, not clinical guidance.",
            "risk_item_share": f"{risk_total}/{gold_total}",
            "query_risk_share": f"{risk_queries}/{len(all_queries)}",
            "strict_scripts": sorted(STRICT_SCRIPTS),
        },
        "engine": {},
        "utility_weights": {},
        "canonical_values": {
            "three days": "3d", "five days": "5d", "two weeks": "2w",
            "one day": "1d", "ten days": "10d", "one week": "1w",
        },
        "thresholds": {
            "policies": {
                "full_framework": {"coverage_min": 0.6, "risk_recall_min": 0.6,
                                   "structural_min": 0.6},
            },
            "retrieval": {
                "Hybrid Retrieval": {"recall_at_5_min": 0.6, "object_hit_min": 0.5,
                                     "path_hit_min": 0.4},
            },
        },
    })


def build_bundled_data(root: Path) -> None:
    build_pack(root / "pilot_pack")
    build_kb(root / "kb")


if __name__ == "__main__":
    import sys

    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "data"
    build_bundled_data(target)
    print(f"bundled data written to {target}")
