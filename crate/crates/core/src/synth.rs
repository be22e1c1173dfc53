//! Seeded generator of trial-like abstracts with a planted sample size.
//!
//! Each abstract states its size once in the methods, surrounded by the
//! usual distractors: recruitment years, centre and country counts, ages,
//! doses, follow-up durations, arm sizes and responder counts. Some size
//! sentences open with a distractor number so that the size is not simply
//! the first integer of its sentence.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Abstract, Category};
use crate::{seed, Result};

const POPULATIONS: &[&str] = &[
    "patients", "participants", "subjects", "women", "men", "adults", "children", "volunteers",
];
const CONDITIONS: &[&str] = &[
    "type 2 diabetes", "chronic heart failure", "major depression", "asthma", "hypertension",
    "osteoarthritis of the knee", "rheumatoid arthritis", "chronic kidney disease", "migraine",
    "atrial fibrillation",
];
const DRUGS: &[&str] = &[
    "metformin", "ramipril", "sertraline", "budesonide", "amlodipine", "celecoxib", "methotrexate",
    "atorvastatin", "topiramate", "apixaban", "vitamin D",
];
const OUTCOMES: &[&str] = &[
    "mortality", "hospital admission", "symptom scores", "blood pressure", "pain intensity",
    "quality of life", "glycated haemoglobin", "relapse",
];
const SITES: &[&str] = &["hospitals", "centres", "clinics", "practices"];
const UNITS: &[&str] = &["weeks", "months"];
const METHOD_LABELS: &[&str] = &["Methods", "Patients and methods", "Design", "Participants", "Methods and findings"];
const BACKGROUND_LABELS: &[&str] = &["Background", "Introduction", "Context"];
const OBJECTIVE_LABELS: &[&str] = &["Objective", "Aims", "Purpose"];
const RESULT_LABELS: &[&str] = &["Results", "Findings"];
const CONCLUSION_LABELS: &[&str] = &["Conclusions", "Conclusion", "Interpretation"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub seed: u64,
    /// Share of abstracts whose size is spelled out in words.
    pub number_word_rate: f64,
    /// Share of size sentences that open with a distractor number.
    pub leading_distractor_rate: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            seed: 7,
            number_word_rate: 0.05,
            leading_distractor_rate: 0.6,
        }
    }
}

const ONES: [&str; 20] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
    "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen",
];
const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

/// English rendering of `0 < n < 1000`, e.g. "two hundred and forty-one".
pub fn spell_out(n: u64) -> String {
    assert!(n > 0 && n < 1000, "spell_out supports 1..=999");
    let mut parts = Vec::new();
    let hundreds = n / 100;
    let rest = n % 100;
    if hundreds > 0 {
        parts.push(format!("{} hundred", ONES[hundreds as usize]));
    }
    if rest > 0 {
        if hundreds > 0 {
            parts.push("and".to_string());
        }
        if rest < 20 {
            parts.push(ONES[rest as usize].to_string());
        } else if rest.is_multiple_of(10) {
            parts.push(TENS[(rest / 10) as usize].to_string());
        } else {
            parts.push(format!("{}-{}", TENS[(rest / 10) as usize], ONES[(rest % 10) as usize]));
        }
    }
    parts.join(" ")
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

struct Gen {
    rng: ChaCha8Rng,
    opts: SynthOptions,
}

impl Gen {
    fn pick<'a>(&mut self, xs: &'a [&'a str]) -> &'a str {
        xs.choose(&mut self.rng).copied().unwrap()
    }

    fn range(&mut self, lo: u64, hi: u64) -> u64 {
        self.rng.random_range(lo..=hi)
    }

    /// A value in `lo..=hi` different from every value in `avoid`.
    fn distinct(&mut self, lo: u64, hi: u64, avoid: &[u64]) -> u64 {
        loop {
            let v = self.range(lo, hi);
            if !avoid.contains(&v) {
                return v;
            }
        }
    }

    /// Log-uniform size between 24 and 4000.
    fn size(&mut self) -> u64 {
        let x: f64 = self.rng.random_range(24f64.ln()..4000f64.ln());
        x.exp().round() as u64
    }

    fn size_sentence(&mut self, n: u64, pop: &str, cond: &str, spelled: bool) -> String {
        let drug = self.pick(DRUGS);
        let site = self.pick(SITES);
        let avoid = [n];
        if spelled {
            let words = capitalize(&spell_out(n));
            return match self.range(0, 1) {
                0 => format!("{words} {pop} with {cond} were randomly assigned to {drug} or placebo."),
                _ => format!("{words} {pop} were enrolled and randomised to {drug} or usual care."),
            };
        }
        if self.rng.random_bool(self.opts.leading_distractor_rate) {
            let d = self.distinct(10, 90, &avoid);
            let c = self.distinct(10, 30, &[n, d]);
            let m = self.distinct(12, 60, &[n, d]);
            let a1 = self.distinct(18, 40, &avoid);
            let a2 = self.distinct(60, 85, &avoid);
            match self.range(0, 4) {
                0 => format!("At {d} {site} in {c} countries, {n} {pop} with {cond} were randomly assigned to {drug} or placebo."),
                1 => format!("Over {m} months, {n} {pop} were recruited from {d} {site} and randomised to {drug} or placebo."),
                2 => format!("Aged {a1} to {a2} years, {n} {pop} with {cond} were randomly allocated to {drug} or usual care."),
                3 => format!("In {d} {site}, a total of {n} {pop} were enrolled and randomised."),
                _ => format!("Across {d} {site}, we randomised {n} {pop} with {cond} to {drug} or placebo."),
            }
        } else {
            let d = self.distinct(10, 90, &avoid);
            let a1 = self.distinct(18, 40, &avoid);
            let a2 = self.distinct(60, 85, &avoid);
            let dose = [10u64, 20, 25, 40, 50, 100, 200, 500].choose(&mut self.rng).copied().unwrap();
            let m = self.distinct(12, 60, &avoid);
            match self.range(0, 4) {
                0 => format!("A total of {n} {pop} with {cond} were randomly assigned to {drug} or placebo at {d} {site}."),
                1 => format!("We randomised {n} {pop} aged {a1} to {a2} years to {drug} {dose} mg or placebo."),
                2 => format!("{n} {pop} were enrolled and followed for {m} months."),
                3 => format!("The trial enrolled {n} {pop} from {d} {site} between {} and {}.", self.range(1990, 2002), self.range(2003, 2012)),
                _ => format!("In total, {n} {pop} with {cond} were recruited and randomly allocated to {drug} or usual care."),
            }
        }
    }

    fn background(&mut self, cond: &str) -> Vec<String> {
        let mut out = Vec::new();
        let n_sent = self.range(1, 2);
        for _ in 0..n_sent {
            let s = match self.range(0, 3) {
                0 => format!("{} affects more than {} million people worldwide.", capitalize(cond), self.range(10, 400)),
                1 => format!("Since {}, treatment of {cond} has changed little.", self.range(1960, 2005)),
                2 => format!("About {} % of adults older than {} years have {cond}.", self.range(10, 40), self.range(40, 70)),
                _ => format!("Each year {} deaths are attributed to {cond}.", self.range(1000, 90000)),
            };
            out.push(s);
        }
        out
    }

    fn methods_extra(&mut self, n: u64) -> Option<String> {
        let drug = self.pick(DRUGS);
        let unit = self.pick(UNITS);
        let outcome = self.pick(OUTCOMES);
        let avoid = [n];
        match self.range(0, 4) {
            0 => Some(format!(
                "Treatment lasted {} {unit} and the primary outcome was {outcome}.",
                self.distinct(12, 52, &avoid)
            )),
            1 => Some(format!(
                "Participants received {drug} {} mg twice daily.",
                [20u64, 50, 100, 250].choose(&mut self.rng).unwrap()
            )),
            2 => Some(format!(
                "Recruitment ran from {} to {}.",
                self.range(1990, 2004),
                self.range(2005, 2014)
            )),
            _ => None,
        }
    }

    fn results(&mut self, n: u64, pop: &str) -> Vec<String> {
        let mut out = Vec::new();
        let n1 = n / 2 + self.range(0, (n / 10).max(1));
        let n1 = n1.min(n - 1);
        let n2 = n - n1;
        let unit = self.pick(UNITS);
        let outcome = self.pick(OUTCOMES);
        if self.rng.random_bool(0.6) {
            out.push(format!("The treatment group (n = {n1}) and the control group (n = {n2}) were similar at baseline."));
        }
        let completed = self.distinct(n * 3 / 4, n.saturating_sub(1).max(n * 3 / 4), &[n]);
        let resp = self.distinct(n / 8, (n / 3).max(n / 8 + 1), &[n]);
        match self.range(0, 2) {
            0 => out.push(format!("After {} {unit}, {completed} {pop} completed follow-up.", self.distinct(12, 52, &[n]))),
            1 => out.push(format!("{} improved in {resp} {pop} receiving active treatment.", capitalize(outcome))),
            _ => out.push(format!("Mean {outcome} fell by {} % over {} {unit}.", self.range(10, 35), self.distinct(12, 48, &[n]))),
        }
        out
    }

    fn abstract_(&mut self, id: String) -> Result<Abstract> {
        let n = self.size();
        let spelled = n < 1000 && self.rng.random_bool(self.opts.number_word_rate);
        let pop = self.pick(POPULATIONS);
        let cond = self.pick(CONDITIONS);
        let drug = self.pick(DRUGS);
        let outcome = self.pick(OUTCOMES);

        let background = self.background(cond).join(" ");
        let objective = format!("To assess whether {drug} reduces {outcome} in {pop} with {cond}.");
        let mut methods = Vec::new();
        if self.rng.random_bool(0.5) {
            methods.extend(self.methods_extra(n));
        }
        methods.push(self.size_sentence(n, pop, cond, spelled));
        methods.extend(self.methods_extra(n));
        let methods = methods.join(" ");
        let results = self.results(n, pop).join(" ");
        let conclusion = format!(
            "{} did not change {outcome} in {pop} with {cond} after {} {}.",
            capitalize(drug),
            self.distinct(12, 52, &[n]),
            self.pick(UNITS)
        );

        let labels = [
            self.pick(BACKGROUND_LABELS),
            self.pick(OBJECTIVE_LABELS),
            self.pick(METHOD_LABELS),
            self.pick(RESULT_LABELS),
            self.pick(CONCLUSION_LABELS),
        ];
        Abstract::build(
            &id,
            Some(n),
            &[
                (Some(Category::Background), Some(labels[0]), &background),
                (Some(Category::Objective), Some(labels[1]), &objective),
                (Some(Category::Methods), Some(labels[2]), &methods),
                (Some(Category::Results), Some(labels[3]), &results),
                (Some(Category::Conclusions), Some(labels[4]), &conclusion),
            ],
        )
    }
}

/// `n` gold-annotated abstracts with ids `{prefix}-{i}`.
pub fn generate(n: usize, prefix: &str, opts: SynthOptions) -> Result<Vec<Abstract>> {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed::derive(opts.seed, prefix)),
        opts,
    };
    (0..n).map(|i| g.abstract_(format!("{prefix}-{i:04}"))).collect()
}

/// Disjoint train and test corpora drawn from the same distribution.
pub fn generate_split(train: usize, test: usize, opts: SynthOptions) -> Result<(Vec<Abstract>, Vec<Abstract>)> {
    Ok((generate(train, "train", opts)?, generate(test, "test", opts)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::extract_candidates;

    #[test]
    fn spelled_numbers() {
        assert_eq!(spell_out(7), "seven");
        assert_eq!(spell_out(40), "forty");
        assert_eq!(spell_out(241), "two hundred and forty-one");
        assert_eq!(spell_out(300), "three hundred");
    }

    #[test]
    fn gold_is_always_a_candidate() {
        let corpus = generate(200, "t", SynthOptions::default()).unwrap();
        for a in &corpus {
            let gold = a.gold_size.unwrap();
            let values: Vec<u64> = extract_candidates(a).iter().map(|c| c.value).collect();
            assert!(values.contains(&gold), "{}: gold {gold} not in {values:?}", a.id);
        }
    }

    #[test]
    fn deterministic() {
        let a = generate(5, "x", SynthOptions::default()).unwrap();
        let b = generate(5, "x", SynthOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
