use std::cmp::Ordering;
use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ConstraintError;
use crate::channel::CapacityMap;
use crate::scenario::{ChannelGrid, VehicleId};

/// Boolean vehicle-by-subchannel incidence: `x[i][k]` is set iff vehicle
/// `i` transmits on global subchannel `k`.
///
/// Ordering is lexicographic over the row-major bit vector, with an unset
/// bit sorting before a set one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    vehicles: usize,
    subchannels: usize,
    bits: Vec<bool>,
}

impl Assignment {
    pub fn empty(vehicles: usize, subchannels: usize) -> Self {
        Self { vehicles, subchannels, bits: vec![false; vehicles * subchannels] }
    }

    pub fn for_grid(vehicles: usize, grid: &ChannelGrid) -> Self {
        Self::empty(vehicles, grid.total_subchannels())
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self, ConstraintError> {
        let vehicles = rows.len();
        let subchannels = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != subchannels) {
            return Err(ConstraintError::ShapeMismatch {
                what: "assignment row",
                expected: (vehicles, subchannels),
                got: (vehicles, bad.len()),
            });
        }
        Ok(Self { vehicles, subchannels, bits: rows.concat() })
    }

    #[inline]
    pub fn vehicle_count(&self) -> usize {
        self.vehicles
    }

    #[inline]
    pub fn subchannel_count(&self) -> usize {
        self.subchannels
    }

    #[inline]
    pub fn get(&self, id: VehicleId, k: usize) -> bool {
        self.bits[id.index() * self.subchannels + k]
    }

    #[inline]
    pub fn set(&mut self, id: VehicleId, k: usize, on: bool) {
        self.bits[id.index() * self.subchannels + k] = on;
    }

    #[inline]
    pub fn row(&self, id: VehicleId) -> &[bool] {
        let start = id.index() * self.subchannels;
        &self.bits[start..start + self.subchannels]
    }

    pub fn clear_row(&mut self, id: VehicleId) {
        let start = id.index() * self.subchannels;
        self.bits[start..start + self.subchannels].fill(false);
    }

    /// The flattened vector `x`, vehicle-major.
    #[inline]
    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    /// Global indices of the subchannels used by `id`.
    pub fn subchannels_of(&self, id: VehicleId) -> impl Iterator<Item = usize> + '_ {
        self.row(id).iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k)
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Achieved rate `sum_k c_ik x_ik` of one vehicle.
    pub fn rate(&self, c: &CapacityMap, id: VehicleId) -> f64 {
        self.subchannels_of(id).map(|k| c.rate(id, k)).sum()
    }

    pub fn rates(&self, c: &CapacityMap) -> Vec<f64> {
        (0..self.vehicles).map(|i| self.rate(c, VehicleId::from_index(i))).collect()
    }

    /// Objective `c^T x`.
    pub fn objective(&self, c: &CapacityMap) -> f64 {
        self.rates(c).iter().sum()
    }

    pub fn to_matrix(&self) -> Array2<u8> {
        Array2::from_shape_fn((self.vehicles, self.subchannels), |(i, k)| self.bits[i * self.subchannels + k] as u8)
    }

    /// Writes one comma-separated 0/1 row per vehicle.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ConstraintError> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for i in 0..self.vehicles {
            out.write_record(self.row(VehicleId::from_index(i)).iter().map(|&b| if b { "1" } else { "0" }))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`Assignment::write_csv`]. Blank lines
    /// and lines starting with `#` are ignored.
    pub fn read_csv<R: Read>(r: R) -> Result<Self, ConstraintError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(r);
        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .enumerate()
                .map(|(col, field)| match field {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(ConstraintError::BadAssignmentCell {
                        row: line + 1,
                        col: col + 1,
                        value: other.to_string(),
                    }),
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }
}

impl PartialOrd for Assignment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Assignment {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.vehicles, self.subchannels)
            .cmp(&(other.vehicles, other.subchannels))
            .then_with(|| self.bits.cmp(&other.bits))
    }
}

// Serialized as one "0101..." string per vehicle.
impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<String> = self
            .bits
            .chunks(self.subchannels.max(1))
            .take(self.vehicles)
            .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<String>::deserialize(deserializer)?;
        let parsed = rows
            .iter()
            .map(|r| {
                r.chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(serde::de::Error::custom(format!("invalid assignment bit {other:?}"))),
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Assignment::from_rows(&parsed).map_err(serde::de::Error::custom)
    }
}
