//! Binary dump of solved tables: the magic bytes `SHUTOFF1`, a little-endian
//! `u64` header length, a JSON header, then the values as little-endian
//! `f64` in the table's row-major order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cpp_sched::{CppParams, CppTable, QuadCost};
use crate::error::{Error, Result};
use crate::risk_cost::CostSchedule;
use crate::scenario1::BudgetTable;
use crate::scenario2::AdjustmentTable;

pub const MAGIC: &[u8; 8] = b"SHUTOFF1";
pub const FORMAT_VERSION: u32 = 1;

/// Any table that can be written to disk.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredTable {
    Budget(BudgetTable),
    Adjustment(AdjustmentTable),
    Cpp(CppTable),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
enum Layout {
    Budget {
        horizon: usize,
        budget: usize,
        costs: CostSchedule,
        wrp: Vec<f64>,
    },
    Adjustment {
        horizon: usize,
        costs: CostSchedule,
        wrp: Vec<f64>,
    },
    Cpp {
        params: CppParams,
        quad: QuadCost,
        mean_demand: Vec<f64>,
        mean_square: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    /// Axis lengths of the value array, outermost first.
    dims: Vec<usize>,
    #[serde(flatten)]
    layout: Layout,
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl StoredTable {
    fn parts(&self) -> (Layout, Vec<usize>, &[f64]) {
        match self {
            StoredTable::Budget(t) => (
                Layout::Budget {
                    horizon: t.horizon(),
                    budget: t.budget(),
                    costs: t.costs().clone(),
                    wrp: t.wrp().to_vec(),
                },
                vec![t.horizon() + 1, t.budget() + 1, 2, t.n_states()],
                t.values(),
            ),
            StoredTable::Adjustment(t) => (
                Layout::Adjustment {
                    horizon: t.horizon(),
                    costs: t.costs().clone(),
                    wrp: t.wrp().to_vec(),
                },
                vec![t.horizon() + 1, 2, t.n_states()],
                t.values(),
            ),
            StoredTable::Cpp(t) => (
                Layout::Cpp {
                    params: t.params().clone(),
                    quad: t.quad().clone(),
                    mean_demand: t.mean_demand().to_vec(),
                    mean_square: t.mean_square().to_vec(),
                },
                vec![t.horizon() + 1, t.budget() + 1, t.n_states()],
                t.values(),
            ),
        }
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let (layout, dims, values) = self.parts();
        let header = Header {
            format: "shutoff-table".into(),
            version: FORMAT_VERSION,
            dims,
            layout,
        };
        let json = serde_json::to_vec(&header).map_err(std::io::Error::other)?;
        out.write_all(MAGIC)?;
        out.write_all(&(json.len() as u64).to_le_bytes())?;
        out.write_all(&json)?;
        let mut buf = Vec::with_capacity(values.len() * 8);
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(io_error(path))?;
        self.write_to(std::io::BufWriter::new(file)).map_err(io_error(path))
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let bad = |what: &str| Error::Format(what.to_string());
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(|_| bad("file is too short"))?;
        if &magic != MAGIC {
            return Err(bad("not a table file (bad magic)"));
        }
        let mut len = [0u8; 8];
        input.read_exact(&mut len).map_err(|_| bad("truncated header length"))?;
        let len = usize::try_from(u64::from_le_bytes(len)).map_err(|_| bad("header too large"))?;
        let mut json = vec![0u8; len];
        input.read_exact(&mut json).map_err(|_| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(&json)?;
        if header.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported table version {}", header.version)));
        }
        let count: usize = header.dims.iter().product();
        let mut raw = Vec::new();
        input.read_to_end(&mut raw).map_err(|_| bad("unreadable values"))?;
        if raw.len() != count * 8 {
            return Err(Error::Format(format!(
                "expected {count} values, found {} bytes",
                raw.len()
            )));
        }
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(match header.layout {
            Layout::Budget { horizon, budget, costs, wrp } => {
                StoredTable::Budget(BudgetTable::from_parts(horizon, budget, costs, wrp, values)?)
            }
            Layout::Adjustment { horizon, costs, wrp } => {
                StoredTable::Adjustment(AdjustmentTable::from_parts(horizon, costs, wrp, values)?)
            }
            Layout::Cpp { params, quad, mean_demand, mean_square } => {
                StoredTable::Cpp(CppTable::from_parts(params, quad, mean_demand, mean_square, values)?)
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(io_error(path))?;
        Self::read_from(std::io::BufReader::new(file))
    }
}
