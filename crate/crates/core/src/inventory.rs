use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AssetCategory {
    Document,
    ViewerScript,
    ViewerStyle,
    Panorama,
    Preview,
    Cubemap,
    Picture,
}

impl AssetCategory {
    /// Fixed reporting order.
    pub const ALL: [AssetCategory; 7] = [
        AssetCategory::Document,
        AssetCategory::ViewerScript,
        AssetCategory::ViewerStyle,
        AssetCategory::Panorama,
        AssetCategory::Preview,
        AssetCategory::Cubemap,
        AssetCategory::Picture,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AssetCategory::Document => "document",
            AssetCategory::ViewerScript => "viewer_script",
            AssetCategory::ViewerStyle => "viewer_style",
            AssetCategory::Panorama => "panorama",
            AssetCategory::Preview => "preview",
            AssetCategory::Cubemap => "cubemap",
            AssetCategory::Picture => "picture",
        }
    }

    pub fn is_image(self) -> bool {
        matches!(
            self,
            AssetCategory::Panorama | AssetCategory::Preview | AssetCategory::Cubemap | AssetCategory::Picture
        )
    }
}

impl fmt::Display for AssetCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InventoryRow {
    pub path: String,
    pub category: AssetCategory,
    pub bytes: u64,
}

/// Byte accounting of a bundle. Totals are always derived from the rows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ByteInventory {
    rows: Vec<InventoryRow>,
}

impl ByteInventory {
    pub fn new(rows: Vec<InventoryRow>) -> Self {
        Self { rows }
    }

    pub fn push(&mut self, path: impl Into<String>, category: AssetCategory, bytes: u64) {
        self.rows.push(InventoryRow {
            path: path.into(),
            category,
            bytes,
        });
    }

    pub fn rows(&self) -> &[InventoryRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, path: &str) -> Option<&InventoryRow> {
        self.rows.iter().find(|r| r.path == path)
    }

    pub fn category_total(&self, category: AssetCategory) -> u64 {
        self.rows
            .iter()
            .filter(|r| r.category == category)
            .map(|r| r.bytes)
            .sum()
    }

    /// One entry per category in [`AssetCategory::ALL`] order, zeros included.
    pub fn totals(&self) -> Vec<(AssetCategory, u64)> {
        AssetCategory::ALL
            .into_iter()
            .map(|c| (c, self.category_total(c)))
            .collect()
    }

    pub fn grand_total(&self) -> u64 {
        self.totals().into_iter().map(|(_, b)| b).sum()
    }

    pub fn sort_by_path(&mut self) {
        self.rows.sort_by(|a, b| a.path.cmp(&b.path));
    }
}
