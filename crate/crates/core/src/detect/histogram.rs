use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use super::model::{ion_components, PhotonModel};
use crate::error::{invalid, Error, Result};
use crate::observables::SpinDistribution;

/// Photon-count histogram: `counts[k]` shots recorded `k` photons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountHistogram {
    pub counts: Vec<u64>,
}

impl CountHistogram {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max_count(&self) -> usize {
        self.counts.iter().rposition(|&c| c > 0).unwrap_or(0)
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Reads `count,shots` rows; lines starting with `#` and a header row are skipped.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr =
            csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let mut counts = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return invalid(format!("histogram row {} needs two columns", line + 1));
            }
            let (Ok(k), Ok(c)) = (rec[0].parse::<usize>(), rec[1].parse::<u64>()) else {
                if line == 0 {
                    continue;
                }
                return invalid(format!("histogram row {} is not `count,shots`", line + 1));
            };
            if counts.len() <= k {
                counts.resize(k + 1, 0);
            }
            counts[k] += c;
        }
        if counts.is_empty() {
            return invalid("histogram is empty");
        }
        Ok(Self { counts })
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["count", "shots"])?;
        for (k, c) in self.counts.iter().enumerate() {
            w.write_record([k.to_string(), c.to_string()])?;
        }
        w.flush().map_err(Error::Io)?;
        Ok(())
    }
}

/// Mixture-component picker and per-component Poisson sampler for one ion.
type IonSampler = (WeightedIndex<f64>, Vec<Option<Poisson<f64>>>);

/// Draws `shots` detection events from `p` by simulating each ion's mixture
/// component and Poisson count. Counts above `max_count` land in the last bin.
pub fn synthesize_histogram<R: Rng + ?Sized>(
    p: &SpinDistribution,
    model: &PhotonModel,
    shots: u64,
    max_count: usize,
    rng: &mut R,
) -> Result<CountHistogram> {
    model.validate()?;
    let n = p.n;
    let pick_s = WeightedIndex::new(&p.p).map_err(|e| Error::InvalidInput(format!("bad distribution: {e}")))?;
    let sampler = |bright: bool| -> Result<IonSampler> {
        let comps = ion_components(model, bright);
        let idx = WeightedIndex::new(comps.iter().map(|c| c.0)).map_err(|e| Error::InvalidInput(format!("{e}")))?;
        let pois = comps.iter().map(|c| if c.1 > 0.0 { Poisson::new(c.1).ok() } else { None }).collect();
        Ok((idx, pois))
    };
    let bright = sampler(true)?;
    let dark = sampler(false)?;
    let draw = |which: &IonSampler, rng: &mut R| -> usize {
        match &which.1[which.0.sample(rng)] {
            Some(d) => d.sample(rng) as usize,
            None => 0,
        }
    };
    let mut counts = vec![0u64; max_count + 1];
    for _ in 0..shots {
        let s = pick_s.sample(rng);
        let mut k = 0usize;
        for ion in 0..n {
            k += draw(if ion < s { &bright } else { &dark }, rng);
        }
        counts[k.min(max_count)] += 1;
    }
    Ok(CountHistogram { counts })
}
