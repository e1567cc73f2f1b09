//! Plain-text ensemble format.
//!
//! ```text
//! ensemble <method> <n_trees> <c_mode> <min_node_size> <seed> <n_features> <retained>
//! betas <beta_1> ... <beta_T>
//! tree
//! S <feature> <threshold>
//! L <prediction> <count>
//! ...
//! ```
//!
//! Each `tree` line is followed by its nodes in pre-order: a split line is
//! followed by its left subtree, then its right subtree.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{EnsembleConfig, EnsembleModel, FeatureSubset, TreeNode};
use crate::error::{Error, Result};

fn c_mode_name(c: FeatureSubset) -> &'static str {
    match c {
        FeatureSubset::XOver3 => "x3",
        FeatureSubset::SqrtX => "sqrt",
        FeatureSubset::AllX => "all",
    }
}

impl EnsembleModel {
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let c = &self.config;
        writeln!(
            out,
            "ensemble {} {} {} {} {} {} {}",
            c.method.name(),
            c.n_trees,
            c_mode_name(c.c_mode),
            c.min_node_size,
            c.seed,
            self.n_features,
            self.trees.len()
        )?;
        let betas: Vec<String> = self.boost_betas.iter().map(|b| format!("{b:.16e}")).collect();
        if betas.is_empty() {
            writeln!(out, "betas")?;
        } else {
            writeln!(out, "betas {}", betas.join(" "))?;
        }
        for tree in &self.trees {
            writeln!(out, "tree")?;
            write_node(&mut out, tree)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("model text is UTF-8")
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut lines = Vec::new();
        for line in BufReader::new(input).lines() {
            lines.push(line?);
        }
        let mut cursor = Cursor { lines: &lines, pos: 0 };
        let (ln, header) = cursor.next()?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let ["ensemble", method, n_trees, c_mode, l, seed, n_features, retained] = parts[..] else {
            return Err(Error::parse(ln, "bad ensemble header"));
        };
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| Error::parse(ln, format!("bad integer {s:?}")))
        };
        let config = EnsembleConfig {
            method: method.parse()?,
            n_trees: int(n_trees)? as usize,
            c_mode: c_mode.parse()?,
            min_node_size: int(l)? as usize,
            seed: int(seed)?,
        };
        let n_features = int(n_features)? as usize;
        let retained = int(retained)? as usize;
        let (ln, betas_line) = cursor.next()?;
        let mut words = betas_line.split_whitespace();
        if words.next() != Some("betas") {
            return Err(Error::parse(ln, "expected betas line"));
        }
        let boost_betas = words
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::parse(ln, format!("bad beta {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut trees = Vec::with_capacity(retained);
        for _ in 0..retained {
            let (ln, line) = cursor.next()?;
            if line.trim() != "tree" {
                return Err(Error::parse(ln, "expected `tree`"));
            }
            trees.push(read_node(&mut cursor)?);
        }
        Ok(EnsembleModel {
            config,
            n_features,
            trees,
            boost_betas,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        EnsembleModel::read_from(fs::File::open(path)?)
    }
}

fn write_node<W: Write>(out: &mut W, node: &TreeNode) -> Result<()> {
    match node {
        TreeNode::Leaf { prediction, count } => writeln!(out, "L {prediction:.16e} {count}")?,
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            writeln!(out, "S {feature} {threshold:.16e}")?;
            write_node(out, left)?;
            write_node(out, right)?;
        }
    }
    Ok(())
}

struct Cursor<'a> {
    lines: &'a [String],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        let line = self
            .lines
            .get(self.pos)
            .ok_or_else(|| Error::parse(self.pos + 1, "unexpected end of model"))?;
        self.pos += 1;
        Ok((self.pos, line.as_str()))
    }
}

fn read_node(cursor: &mut Cursor<'_>) -> Result<TreeNode> {
    let (ln, line) = cursor.next()?;
    let parts: Vec<&str> = line.split_whitespace().collect();
    let bad = || Error::parse(ln, format!("bad node line {line:?}"));
    match parts[..] {
        ["L", prediction, count] => Ok(TreeNode::Leaf {
            prediction: prediction.parse().map_err(|_| bad())?,
            count: count.parse().map_err(|_| bad())?,
        }),
        ["S", feature, threshold] => {
            let feature = feature.parse().map_err(|_| bad())?;
            let threshold = threshold.parse().map_err(|_| bad())?;
            let left = Box::new(read_node(cursor)?);
            let right = Box::new(read_node(cursor)?);
            Ok(TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            })
        }
        _ => Err(bad()),
    }
}
