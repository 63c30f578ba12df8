//! Companion matplotlib scripts. Runs emit scripts that read the CSVs, never
//! rendered images, so plots can be regenerated or restyled after the fact.

fn prelude(title: &str) -> String {
    format!(
        "#!/usr/bin/env python3\n\
         \"\"\"{title}\n\n\
         Reads the CSVs written by the run this script was emitted with; the\n\
         leading '#' provenance line in each file is skipped automatically.\n\
         \"\"\"\n\
         import numpy as np\n\
         import matplotlib\n\
         matplotlib.use(\"Agg\")\n\
         import matplotlib.pyplot as plt\n\n\
         def load(name):\n\
         \x20   return np.genfromtxt(name, delimiter=\",\", names=True)\n\n"
    )
}

/// Overlaid normalized density curves, one per beta.
pub fn density_script(scenario: &str, curves: &[(f64, String)]) -> String {
    let mut s = prelude(&format!(
        "Normalized sampling-optimal density curves for the {scenario} scenario."
    ));
    s.push_str("CURVES = [\n");
    for (beta, file) in curves {
        s.push_str(&format!("    ({beta}, \"{file}\"),\n"));
    }
    s.push_str("]\n\n");
    s.push_str(
        "fig, ax = plt.subplots(figsize=(6.0, 4.0))\n\
         for beta, name in CURVES:\n\
         \x20   data = load(name)\n\
         \x20   ax.plot(data[\"w\"], data[\"density\"], label=f\"beta = {beta:g}\")\n\
         ax.set_xlabel(\"w\")\n\
         ax.set_ylabel(\"normalized density\")\n\
         ax.legend()\n\
         fig.tight_layout()\n",
    );
    s.push_str(&format!("fig.savefig(\"pdf_{scenario}.png\", dpi=150)\n"));
    s
}

/// Log-log error and value-gap curves against beta, with error bars when the
/// sweep carried standard errors.
pub fn sweep_script(scenario: &str, csv: &str, sampled: bool) -> String {
    let mut s = prelude(&format!(
        "Smoothing-bias sweep for the {scenario} scenario: control error and \
         value gap against beta."
    ));
    s.push_str(&format!("data = load(\"{csv}\")\n"));
    s.push_str(
        "fig, ax = plt.subplots(figsize=(6.0, 4.0))\n",
    );
    if sampled {
        s.push_str(
            "ax.errorbar(data[\"beta\"], data[\"control_error\"], yerr=3 * data[\"control_se\"],\n\
             \x20           marker=\"o\", label=\"control error\")\n\
             ax.errorbar(data[\"beta\"], data[\"value_gap\"], yerr=3 * data[\"value_se\"],\n\
             \x20           marker=\"s\", label=\"value gap\")\n",
        );
    } else {
        s.push_str(
            "ax.plot(data[\"beta\"], data[\"control_error\"], marker=\"o\", label=\"control error\")\n\
             ax.plot(data[\"beta\"], data[\"value_gap\"], marker=\"s\", label=\"value gap\")\n",
        );
    }
    s.push_str(
        "ax.set_xscale(\"log\")\n\
         ax.set_yscale(\"log\")\n\
         ax.set_xlabel(\"beta\")\n\
         ax.legend()\n\
         fig.tight_layout()\n",
    );
    s.push_str(&format!("fig.savefig(\"bias_{scenario}.png\", dpi=150)\n"));
    s
}

/// Two panels: the (u0, u1) plane with oracle points and the solver's iterate
/// path, and the closed-loop policy over the reachable first state.
pub fn compare_script(scenario: &str, points: &str, policy: &str, iterates: &str) -> String {
    let mut s = prelude(&format!(
        "Solver and oracle comparison for the {scenario} scenario."
    ));
    s.push_str(&format!(
        "points = load(\"{points}\")\npolicy = load(\"{policy}\")\niters = load(\"{iterates}\")\n\n"
    ));
    s.push_str(
        "labels = np.genfromtxt(\"",
    );
    s.push_str(points);
    s.push_str(
        "\", delimiter=\",\", names=True, dtype=None, encoding=\"utf-8\")[\"kind\"]\n\n\
         fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.0))\n\
         ax1.plot(iters[\"u0\"], iters[\"u1\"], \"-o\", color=\"0.6\", markersize=3,\n\
         \x20        label=\"shrinking iterates\")\n\
         for kind, u0, u1 in zip(labels, points[\"u0\"], points[\"u1\"]):\n\
         \x20   if np.isnan(u1):\n\
         \x20       ax1.axvline(u0, linestyle=\":\", label=f\"{kind} (u0 only)\")\n\
         \x20   else:\n\
         \x20       ax1.plot(u0, u1, \"*\", markersize=10, label=kind)\n\
         ax1.set_xlabel(\"u0\")\n\
         ax1.set_ylabel(\"u1\")\n\
         ax1.legend(fontsize=7)\n\
         ax2.plot(policy[\"x1\"], policy[\"u1\"])\n\
         ax2.set_xlabel(\"x1\")\n\
         ax2.set_ylabel(\"second-stage policy u1(x1)\")\n\
         fig.tight_layout()\n",
    );
    s.push_str(&format!("fig.savefig(\"compare_{scenario}.png\", dpi=150)\n"));
    s
}
