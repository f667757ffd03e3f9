use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::LabError;
use crate::bus::{benchmark_roundtrip_with, BenchOptions, ConversionMode, LatencyStats, TransportKind};

/// Direct and double-convert latency for one transport and payload size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub transport: TransportKind,
    pub payload_size: usize,
    pub iterations: usize,
    pub direct: LatencyStats,
    pub double_convert: LatencyStats,
}

impl BenchRow {
    /// Double-convert median over direct median.
    pub fn ratio(&self) -> f64 {
        self.double_convert.median_ns as f64 / self.direct.median_ns.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

/// Runs both conversion modes for every size.
pub fn bench(transport: TransportKind, sizes: &[usize], iterations: usize) -> Result<BenchTable, LabError> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let run = |mode| benchmark_roundtrip_with(&BenchOptions::new(transport, size, iterations, mode));
        rows.push(BenchRow {
            transport,
            payload_size: size,
            iterations,
            direct: run(ConversionMode::Direct)?,
            double_convert: run(ConversionMode::DoubleConvert)?,
        });
    }
    Ok(BenchTable { rows })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    transport: TransportKind,
    payload_size: usize,
    iterations: usize,
    direct_samples: usize,
    direct_median_ns: u64,
    direct_p99_ns: u64,
    direct_mean_ns: u64,
    direct_min_ns: u64,
    direct_max_ns: u64,
    double_samples: usize,
    double_median_ns: u64,
    double_p99_ns: u64,
    double_mean_ns: u64,
    double_min_ns: u64,
    double_max_ns: u64,
    ratio: f64,
}

impl BenchTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LabError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            let (d, c) = (&r.direct, &r.double_convert);
            w.serialize(CsvRow {
                transport: r.transport,
                payload_size: r.payload_size,
                iterations: r.iterations,
                direct_samples: d.samples,
                direct_median_ns: d.median_ns,
                direct_p99_ns: d.p99_ns,
                direct_mean_ns: d.mean_ns,
                direct_min_ns: d.min_ns,
                direct_max_ns: d.max_ns,
                double_samples: c.samples,
                double_median_ns: c.median_ns,
                double_p99_ns: c.p99_ns,
                double_mean_ns: c.mean_ns,
                double_min_ns: c.min_ns,
                double_max_ns: c.max_ns,
                ratio: r.ratio(),
            })
            .map_err(|e| LabError::Csv(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, LabError> {
        let mut rows = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize::<CsvRow>() {
            let r = row.map_err(|e| LabError::Csv(e.to_string()))?;
            rows.push(BenchRow {
                transport: r.transport,
                payload_size: r.payload_size,
                iterations: r.iterations,
                direct: LatencyStats {
                    samples: r.direct_samples,
                    median_ns: r.direct_median_ns,
                    p99_ns: r.direct_p99_ns,
                    mean_ns: r.direct_mean_ns,
                    min_ns: r.direct_min_ns,
                    max_ns: r.direct_max_ns,
                },
                double_convert: LatencyStats {
                    samples: r.double_samples,
                    median_ns: r.double_median_ns,
                    p99_ns: r.double_p99_ns,
                    mean_ns: r.double_mean_ns,
                    min_ns: r.double_min_ns,
                    max_ns: r.double_max_ns,
                },
            });
        }
        Ok(Self { rows })
    }
}

fn us(ns: u64) -> f64 {
    ns as f64 / 1000.0
}

impl fmt::Display for BenchTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:>8} {:>14} {:>14} {:>14} {:>14} {:>7}",
            "transport", "bytes", "direct p50 µs", "direct p99 µs", "double p50 µs", "double p99 µs", "ratio"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<14} {:>8} {:>14.1} {:>14.1} {:>14.1} {:>14.1} {:>7.2}",
                r.transport.to_string(),
                r.payload_size,
                us(r.direct.median_ns),
                us(r.direct.p99_ns),
                us(r.double_convert.median_ns),
                us(r.double_convert.p99_ns),
                r.ratio()
            )?;
        }
        Ok(())
    }
}
