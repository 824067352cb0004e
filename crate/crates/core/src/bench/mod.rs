//! The benchmark suite: eleven pipelines, their inputs, and a runner that
//! compiles, validates and times them.

mod driver;
mod run;

use crate::interp::Value;
use crate::pipeline::{parse_pipeline, PipelineDesc};

pub use driver::driver_source;
pub use run::{run_bench, write_csv, BenchConfig, BenchError, BenchResult, Variant};

/// Elements in the large arrays at scale 1.
pub const SIMPLE_SIZE: usize = 100_000_000;
/// Elements in the outer arrays of zip and flat_map pipelines at scale 1.
pub const NESTED_SIZE: usize = 10_000_000;
/// Elements in the inner arrays of flat_map pipelines.
pub const INNER_SIZE: usize = 10;

/// Length of an input, in terms of the base size `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Len {
    N,
    /// `n * k`.
    Times(usize),
    /// `n / k`.
    Div(usize),
    Fixed(usize),
}

impl Len {
    pub fn eval(self, n: usize) -> usize {
        match self {
            Len::N => n,
            Len::Times(k) => n * k,
            Len::Div(k) => n / k,
            Len::Fixed(k) => k,
        }
    }
}

/// How an array is filled from the generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fill {
    /// Values in `lo..hi`.
    Uniform { lo: i32, hi: i32 },
    /// `value * 256 + count`, with value in `0..100` and count in `1..=255`.
    RunPairs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArgSpec {
    IntArray { len: Len, fill: Fill, seed: u32 },
    Int(Len),
}

/// One benchmark.
#[derive(Clone, Debug)]
pub struct BenchPipeline {
    pub name: &'static str,
    pub text: &'static str,
    pub args: &'static [ArgSpec],
    /// Base size at scale 1.
    pub size: usize,
}

impl BenchPipeline {
    pub fn desc(&self) -> PipelineDesc {
        parse_pipeline(self.text).expect("suite pipelines parse")
    }

    /// Base size at `scale`, at least 1.
    pub fn base_size(&self, scale: f64) -> usize {
        ((self.size as f64 * scale).round() as usize).max(1)
    }

    pub fn inputs(&self, n: usize) -> Vec<Value> {
        self.args.iter().map(|a| input(*a, n)).collect()
    }
}

/// The generator shared with the C drivers: a 32-bit LCG returning its
/// bits 16..30.
#[derive(Clone, Copy, Debug)]
pub struct Lcg(pub u32);

impl Lcg {
    pub fn next_rand(&mut self) -> i32 {
        self.0 = self.0.wrapping_mul(1_103_515_245).wrapping_add(12_345);
        ((self.0 >> 16) & 0x7fff) as i32
    }
}

pub fn fill(len: usize, fill: Fill, seed: u32) -> Vec<i32> {
    let mut g = Lcg(seed);
    (0..len)
        .map(|_| match fill {
            Fill::Uniform { lo, hi } => lo + g.next_rand() % (hi - lo),
            Fill::RunPairs => {
                let v = g.next_rand() % 100;
                let c = 1 + g.next_rand() % 255;
                v * 256 + c
            }
        })
        .collect()
}

pub fn input(a: ArgSpec, n: usize) -> Value {
    match a {
        ArgSpec::IntArray { len, fill: f, seed } => Value::int_array(&fill(len.eval(n), f, seed)),
        ArgSpec::Int(len) => Value::Int(len.eval(n) as i32),
    }
}

const DIGITS: Fill = Fill::Uniform { lo: 0, hi: 10 };

const fn arr(len: Len, seed: u32) -> ArgSpec {
    ArgSpec::IntArray {
        len,
        fill: DIGITS,
        seed,
    }
}

/// The suite, in report order.
pub static SUITE: &[BenchPipeline] = &[
    BenchPipeline {
        name: "sum",
        text: "pipeline sum(a: int_array) =\n  of_arr(a)\n  |> sum\n",
        args: &[arr(Len::N, 1)],
        size: SIMPLE_SIZE,
    },
    BenchPipeline {
        name: "sumOfSquares",
        text: "pipeline sumOfSquares(a: int_array) =\n  of_arr(a)\n  |> map(e * e)\n  |> sum\n",
        args: &[arr(Len::N, 1)],
        size: SIMPLE_SIZE,
    },
    BenchPipeline {
        name: "maps",
        text: "pipeline maps(a: int_array) =\n  of_arr(a)\n  |> map(e * 1)\n  |> map(e * 2)\n  |> map(e * 3)\n  \
               |> map(e * 4)\n  |> map(e * 5)\n  |> map(e * 6)\n  |> map(e * 7)\n  |> sum\n",
        args: &[arr(Len::N, 1)],
        size: SIMPLE_SIZE,
    },
    BenchPipeline {
        name: "filters",
        text: "pipeline filters(a: int_array) =\n  of_arr(a)\n  |> filter(e > 1)\n  |> filter(e > 2)\n  \
               |> filter(e > 3)\n  |> filter(e > 4)\n  |> filter(e > 5)\n  |> filter(e > 6)\n  \
               |> filter(e > 7)\n  |> sum\n",
        args: &[arr(Len::N, 1)],
        size: SIMPLE_SIZE,
    },
    BenchPipeline {
        name: "dotProduct",
        text: "pipeline dotProduct(a: int_array, b: int_array) =\n  zip_with(x * y, of_arr(a), of_arr(b))\n  |> sum\n",
        args: &[arr(Len::N, 1), arr(Len::N, 2)],
        size: SIMPLE_SIZE,
    },
    BenchPipeline {
        name: "flatMapAfterZip",
        text: "pipeline flatMapAfterZip(a: int_array, b: int_array) =\n  zip_with(x + y, of_arr(a), of_arr(a))\n  \
               |> flat_map(v => of_arr(b) |> map(e * v))\n  |> sum\n",
        args: &[arr(Len::N, 1), arr(Len::Fixed(INNER_SIZE), 2)],
        size: NESTED_SIZE,
    },
    BenchPipeline {
        name: "zipWithAfterFlatMap",
        text: "pipeline zipWithAfterFlatMap(a: int_array, b: int_array) =\n  \
               zip_with(x + y, of_arr(a) |> flat_map(v => of_arr(b) |> map(e + v)), of_arr(a))\n  |> sum\n",
        args: &[arr(Len::N, 1), arr(Len::Fixed(INNER_SIZE), 2)],
        size: NESTED_SIZE,
    },
    BenchPipeline {
        name: "flatMapTake",
        text: "pipeline flatMapTake(a: int_array, b: int_array, n: int) =\n  of_arr(a)\n  \
               |> flat_map(v => of_arr(b) |> map(e * v))\n  |> take(n)\n  |> sum\n",
        args: &[arr(Len::N, 1), arr(Len::Fixed(INNER_SIZE), 2), ArgSpec::Int(Len::Times(2))],
        size: NESTED_SIZE,
    },
    BenchPipeline {
        name: "zipFilterFilter",
        text: "pipeline zipFilterFilter(a: int_array, b: int_array) =\n  \
               zip_with(x + y, of_arr(a) |> filter(e > 7), of_arr(b) |> filter(e > 5))\n  |> sum\n",
        args: &[arr(Len::N, 1), arr(Len::N, 2)],
        size: NESTED_SIZE,
    },
    BenchPipeline {
        name: "zipFlatMapFlatMap",
        text: "pipeline zipFlatMapFlatMap(a: int_array, b: int_array, c: int_array, n: int) =\n  \
               zip_with(x + y,\n    of_arr(a) |> flat_map(v => of_arr(c) |> map(e * v)),\n    \
               of_arr(b) |> flat_map(w => of_arr(c) |> map(e - w)))\n  |> take(n)\n  |> sum\n",
        args: &[
            arr(Len::N, 1),
            arr(Len::N, 2),
            arr(Len::Fixed(INNER_SIZE), 3),
            ArgSpec::Int(Len::Times(2)),
        ],
        size: NESTED_SIZE,
    },
    BenchPipeline {
        name: "runLengthDecoding",
        text: "pipeline runLengthDecoding(p: int_array) =\n  of_arr(p)\n  \
               |> flat_map(v => range(0, v % 256) |> map(v / 256))\n  |> sum\n",
        args: &[ArgSpec::IntArray {
            len: Len::Div(128),
            fill: Fill::RunPairs,
            seed: 4,
        }],
        size: NESTED_SIZE,
    },
];

pub fn find(name: &str) -> Option<&'static BenchPipeline> {
    SUITE.iter().find(|p| p.name == name)
}
