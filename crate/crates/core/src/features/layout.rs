use std::fmt;

use serde::{Deserialize, Serialize};

/// One named block of a feature vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub offset: usize,
    pub fields: Vec<String>,
}

impl Block {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

/// Ordered block descriptors of an encoder's output.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Layout {
    blocks: Vec<Block>,
}

impl Layout {
    pub(crate) fn push(&mut self, name: &str, fields: Vec<String>) {
        let offset = self.len();
        self.blocks.push(Block {
            name: name.to_string(),
            offset,
            fields,
        });
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(Block::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Absolute index of `field` inside `block`.
    pub fn index_of(&self, block: &str, field: &str) -> Option<usize> {
        let b = self.block(block)?;
        b.fields.iter().position(|f| f == field).map(|i| b.offset + i)
    }

    /// Text schema, one block per line: `name<TAB>offset<TAB>length<TAB>f1,f2,...`.
    pub fn to_schema(&self) -> String {
        self.to_string()
    }

    pub fn from_schema(text: &str) -> Result<Layout, String> {
        let mut layout = Layout::default();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parts: Vec<&str> = line.split('\t').collect();
            let [name, offset, len, fields] = parts[..] else {
                return Err(format!("line {}: expected 4 tab-separated columns", n + 1));
            };
            let fields: Vec<String> = if fields.is_empty() {
                Vec::new()
            } else {
                fields.split(',').map(str::to_string).collect()
            };
            let offset: usize = offset.parse().map_err(|_| format!("line {}: bad offset", n + 1))?;
            let len: usize = len.parse().map_err(|_| format!("line {}: bad length", n + 1))?;
            if offset != layout.len() || len != fields.len() {
                return Err(format!("line {}: offset/length inconsistent", n + 1));
            }
            layout.push(name, fields);
        }
        Ok(layout)
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            writeln!(f, "{}\t{}\t{}\t{}", b.name, b.offset, b.len(), b.fields.join(","))?;
        }
        Ok(())
    }
}
