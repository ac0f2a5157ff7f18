"""Writes metadata.csv: a synthetic MIMIC-style manifest for the toy runs."""
import csv
import random

RACES = ["WHITE"] * 6 + ["BLACK/AFRICAN AMERICAN", "BLACK/CAPE VERDEAN", "ASIAN", "HISPANIC/LATINO", ""]
FINDINGS = ["Pleural Effusion", "Edema", "Cardiomegaly"]


def main(path="metadata.csv", patients=700, seed=20240501):
    rng = random.Random(seed)
    header = ["dicom_id", "subject_id", "ViewPosition", "Support Devices", *FINDINGS,
              "No Finding", "anchor_age", "gender", "race"]
    rows = []
    image = 0
    for p in range(patients):
        subject = f"1{p:07d}"
        sex = rng.choice(["F", "M"]) if rng.random() > 0.01 else ""
        age = rng.randint(18, 91)
        race = rng.choice(RACES)
        sick = rng.random() < 0.5
        for _ in range(rng.randint(1, 3)):
            view = "LATERAL" if rng.random() < 0.1 else rng.choice(["PA", "AP"])
            devices = "1.0" if rng.random() < 0.05 else ""
            labels = {f: "" for f in FINDINGS}
            no_finding = ""
            if sick:
                labels[rng.choice(FINDINGS)] = "1.0"
                if rng.random() < 0.2:
                    labels[rng.choice(FINDINGS)] = "-1.0"
            elif rng.random() < 0.04:
                labels[rng.choice(FINDINGS)] = "-1.0"
            else:
                no_finding = "1.0"
            rows.append([f"img{image:06d}", subject, view, devices, *labels.values(), no_finding, age, sex, race])
            image += 1
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


if __name__ == "__main__":
    main()
