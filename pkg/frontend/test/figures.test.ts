import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { parseCsv, SchemaError, splitRow } from "../src/csv.js";
import { render } from "../src/figures.js";

const fixture = (name: string): string =>
  readFileSync(join(__dirname, "fixtures", name), "utf8");

const annotations = (svg: string): string[] => {
  const out: string[] = [];
  const re = /<text[^>]*class="annotation"[^>]*>([^<]*)<\/text>/g;
  for (let m = re.exec(svg); m; m = re.exec(svg)) out.push(m[1]!);
  return out;
};

describe("csv parsing", () => {
  it("reads fit comments and data rows", () => {
    const t = parseCsv(fixture("correlator.csv"));
    expect(t.columns).toEqual(["R", "Czz"]);
    expect(t.fits.fit_xi).toBeGreaterThan(0);
    expect(t.cells.length).toBeGreaterThan(100);
  });

  it("honors quoted cells", () => {
    expect(splitRow('0.04,"0,0","1,1",0.0031')).toEqual(["0.04", "0,0", "1,1", "0.0031"]);
  });

  it("rejects ragged rows with a diagnostic", () => {
    expect(() => parseCsv("a,b\n1,2,3\n")).toThrow(/row 1 has 3 cells/);
  });
});

describe("trajectory figure", () => {
  it("renders a line per observable", () => {
    const svg = render({ kind: "trajectory", csv: fixture("trajectory.csv") });
    expect(svg).toContain("<svg");
    expect((svg.match(/<polyline/g) ?? []).length).toBeGreaterThanOrEqual(2);
    expect(svg).toContain(">beta<");
  });

  it("renders two points for a two-row table", () => {
    const csv = "beta,Z,X,merit,env_iters\n0.0,0.0,0.0,nan,1\n0.1,0.5,0.2,nan,2\n";
    const svg = render({ kind: "trajectory", csv });
    expect((svg.match(/<circle/g) ?? []).length).toBe(2);
  });

  it("diagnoses missing columns", () => {
    expect(() => render({ kind: "trajectory", csv: "beta,Y\n0,1\n" })).toThrow(
      /missing \[Z, X\]/
    );
  });
});

describe("correlator figure", () => {
  it("annotates xi and eta with the exact CSV fit values", () => {
    const raw = fixture("correlator.csv");
    const fits = parseCsv(raw).fits;
    const svg = render({ kind: "correlator", csv: raw });
    const notes = annotations(svg);
    expect(notes).toContain(`xi = ${fits.fit_xi}`);
    expect(notes).toContain(`eta = ${fits.fit_eta}`);
    // two panels, each with data plus a fit overlay
    expect((svg.match(/<polyline/g) ?? []).length).toBeGreaterThanOrEqual(4);
  });

  it("annotates a synthetic pure exponential with its stated xi", () => {
    let lines = ["# fit_xi=50.0", "R,Czz"];
    for (let r = 1; r <= 200; r++) lines.push(`${r},${Math.exp(-r / 50)}`);
    const svg = render({ kind: "correlator", csv: lines.join("\n") });
    expect(annotations(svg)).toContain("xi = 50");
  });

  it("can suppress overlays", () => {
    const svg = render({
      kind: "correlator",
      csv: fixture("correlator.csv"),
      fitOverlay: false,
    });
    expect((svg.match(/<polyline/g) ?? []).length).toBe(2);
  });
});

describe("scaling figure", () => {
  it("annotates both power-law exponents from the CSV", () => {
    const raw = fixture("scaling.csv");
    const fits = parseCsv(raw).fits;
    const svg = render({ kind: "scaling", csv: raw });
    const notes = annotations(svg);
    expect(notes).toContain(`xi ~ M^${fits.fit_xi_exponent}`);
    expect(notes).toContain(`Z ~ M^${fits.fit_z_exponent}`);
  });

  it("rejects non-positive M", () => {
    const csv = "M,xi,Z\n0,1,1\n";
    expect(() => render({ kind: "scaling", csv })).toThrow(SchemaError);
  });
});

describe("finite figure", () => {
  it("renders one series per site pair", () => {
    const svg = render({ kind: "finite", csv: fixture("finite_correlator.csv") });
    const notes = annotations(svg);
    expect(notes).toContain("(0,0)-(1,1)");
    expect(notes).toContain("(0,0)-(0,1)");
  });

  it("diagnoses a schema mismatch with column names", () => {
    expect(() => render({ kind: "finite", csv: "beta,value\n0,1\n" })).toThrow(
      /finite figure needs columns/
    );
  });
});
