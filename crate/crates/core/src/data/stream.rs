use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use super::encode::Encoder;
use super::schema::{headers, reader};
use crate::error::{Error, Result};
use crate::glm::{DesignBlock, ResponseBlock};
use crate::partition::PartitionPlan;

/// A run of rows belonging to one subset.
#[derive(Debug, Clone)]
pub struct SubsetChunk {
    /// 1-based subset index.
    pub subset: usize,
    /// Position of this chunk within its subset, from 0.
    pub sequence: usize,
    pub design: DesignBlock,
    pub response: ResponseBlock,
    /// 0-based source rows, ascending.
    pub rows: Vec<usize>,
    /// True for the subset's final chunk.
    pub last: bool,
}

#[derive(Default)]
struct Buffer {
    design: Vec<f64>,
    response: Vec<f64>,
    rows: Vec<usize>,
    delivered: usize,
    chunks: usize,
}

/// Single forward pass over the CSV that delivers each subset of `plan` as
/// chunks of at most `chunk_rows` rows.
///
/// Rows are routed to a per-subset buffer through the plan's assignment
/// table and flushed when the buffer is full or the subset is complete, so
/// at most `chunk_rows` rows per partially delivered subset are resident.
/// Within a subset, rows arrive in file order.
pub struct SubsetStream<'a> {
    reader: csv::Reader<fs::File>,
    record: csv::StringRecord,
    encoder: &'a Encoder,
    assignment: Vec<u32>,
    sizes: Vec<usize>,
    buffers: Vec<Buffer>,
    pending: VecDeque<SubsetChunk>,
    chunk_rows: usize,
    next_row: usize,
    resident: usize,
    peak_resident: usize,
    done: bool,
}

impl<'a> SubsetStream<'a> {
    pub fn open(
        path: &Path,
        plan: &PartitionPlan,
        encoder: &'a Encoder,
        chunk_rows: usize,
    ) -> Result<Self> {
        if chunk_rows == 0 {
            return Err(Error::InvalidConfig {
                path: "chunk_rows".into(),
                message: "must be at least 1".into(),
            });
        }
        let mut reader = reader(path)?;
        headers(&mut reader)?;
        let sizes = plan.sizes();
        Ok(Self {
            reader,
            record: csv::StringRecord::new(),
            encoder,
            assignment: plan.assignment(),
            buffers: sizes.iter().map(|_| Buffer::default()).collect(),
            sizes,
            pending: VecDeque::new(),
            chunk_rows,
            next_row: 0,
            resident: 0,
            peak_resident: 0,
            done: false,
        })
    }

    /// Largest number of encoded rows held at once, including the chunk
    /// being handed out.
    pub fn peak_resident_rows(&self) -> usize {
        self.peak_resident
    }

    fn flush(&mut self, k: usize) -> Result<()> {
        let width = self.encoder.width();
        let buf = &mut self.buffers[k];
        let rows = std::mem::take(&mut buf.rows);
        let n = rows.len();
        buf.delivered += n;
        let chunk = SubsetChunk {
            subset: k + 1,
            sequence: buf.chunks,
            design: DesignBlock::new(n, width, std::mem::take(&mut buf.design))?,
            response: ResponseBlock::new(std::mem::take(&mut buf.response))?,
            rows,
            last: buf.delivered == self.sizes[k],
        };
        buf.chunks += 1;
        self.pending.push_back(chunk);
        Ok(())
    }

    fn read_one(&mut self) -> Result<bool> {
        if !self.reader.read_record(&mut self.record)? {
            if self.next_row != self.assignment.len() {
                return Err(Error::RowCountDrift {
                    expected: self.assignment.len(),
                    actual: self.next_row,
                });
            }
            return Ok(false);
        }
        let row = self.next_row;
        self.next_row += 1;
        if row >= self.assignment.len() {
            return Err(Error::RowCountDrift {
                expected: self.assignment.len(),
                actual: self.next_row,
            });
        }
        let k = self.assignment[row] as usize;
        let buf = &mut self.buffers[k];
        let y = self
            .encoder
            .encode_record(&self.record, row + 1, &mut buf.design)?;
        buf.response.push(y);
        buf.rows.push(row);
        let full =
            buf.rows.len() == self.chunk_rows || buf.delivered + buf.rows.len() == self.sizes[k];
        self.resident += 1;
        self.peak_resident = self.peak_resident.max(self.resident);
        if full {
            self.resident -= self.buffers[k].rows.len();
            self.flush(k)?;
        }
        Ok(true)
    }
}

impl Iterator for SubsetStream<'_> {
    type Item = Result<SubsetChunk>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(chunk) = self.pending.pop_front() {
                return Some(Ok(chunk));
            }
            if self.done {
                return None;
            }
            match self.read_one() {
                Ok(true) => {}
                Ok(false) => self.done = true,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

/// Convenience wrapper collecting every chunk of every subset.
pub fn stream_subsets(
    path: &Path,
    plan: &PartitionPlan,
    encoder: &Encoder,
    chunk_rows: usize,
) -> Result<Vec<SubsetChunk>> {
    SubsetStream::open(path, plan, encoder, chunk_rows)?.collect()
}
