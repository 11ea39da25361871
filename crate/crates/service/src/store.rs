use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use hexblur::{build_stencil, read_points_csv, BlurParams, Bounds, Dataset, KernelStencil};

use crate::ServiceConfig;

/// An uploaded dataset. Never modified after creation.
#[derive(Debug)]
pub struct DatasetRecord {
    pub id: String,
    pub name: String,
    pub point_count: usize,
    pub bounds: Option<Bounds>,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub dataset: Dataset,
}

type StencilKey = (u64, u64, u64, &'static str);

/// Stencils keyed by the exact bits of their parameters.
#[derive(Debug, Default)]
pub struct StencilCache {
    entries: RwLock<HashMap<StencilKey, Arc<KernelStencil>>>,
}

impl StencilCache {
    fn key(p: &BlurParams) -> StencilKey {
        (
            p.sigma_x.to_bits(),
            p.sigma_y.to_bits(),
            p.epsilon.to_bits(),
            p.mode.as_str(),
        )
    }

    pub fn get_or_build(&self, params: BlurParams) -> hexblur::Result<Arc<KernelStencil>> {
        let key = Self::key(&params);
        if let Some(s) = self.entries.read().expect("stencil cache poisoned").get(&key) {
            return Ok(Arc::clone(s));
        }
        // Built outside the lock; a concurrent duplicate build is identical.
        let stencil = Arc::new(build_stencil(params)?);
        self.entries
            .write()
            .expect("stencil cache poisoned")
            .insert(key, Arc::clone(&stencil));
        Ok(stencil)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("stencil cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Default)]
pub struct AppState {
    datasets: RwLock<HashMap<String, Arc<DatasetRecord>>>,
    pub stencils: StencilCache,
    data_dir: Option<PathBuf>,
    pub threads: usize,
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

impl AppState {
    /// Empty in-memory state.
    pub fn new(threads: usize) -> Self {
        AppState {
            threads,
            ..AppState::default()
        }
    }

    /// State backed by `config.data_dir`, reloading any CSVs already there.
    pub fn open(config: &ServiceConfig) -> std::io::Result<Self> {
        let mut state = AppState::new(config.threads);
        if let Some(dir) = &config.data_dir {
            fs::create_dir_all(dir)?;
            state.data_dir = Some(dir.clone());
            state.reload(dir)?;
        }
        Ok(state)
    }

    fn reload(&self, dir: &Path) -> std::io::Result<()> {
        let mut loaded = 0;
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("csv") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
                continue;
            };
            let text = fs::read_to_string(&path)?;
            let name = text
                .lines()
                .next()
                .and_then(|l| l.strip_prefix("# name="))
                .unwrap_or(&id)
                .to_string();
            let created_at = fs::metadata(&path)?
                .modified()
                .ok()
                .and_then(|t| t.duration_since(UNIX_EPOCH).ok())
                .map_or(0, |d| d.as_secs());
            match read_points_csv(text.as_bytes(), false) {
                Ok((dataset, _)) => {
                    self.insert(DatasetRecord {
                        id,
                        name,
                        point_count: dataset.len(),
                        bounds: dataset.bounds(),
                        created_at,
                        dataset,
                    });
                    loaded += 1;
                }
                Err(e) => log::warn!("skipping {}: {e}", path.display()),
            }
        }
        log::info!("reloaded {loaded} datasets from {}", dir.display());
        Ok(())
    }

    fn insert(&self, record: DatasetRecord) -> Arc<DatasetRecord> {
        let record = Arc::new(record);
        self.datasets
            .write()
            .expect("dataset store poisoned")
            .insert(record.id.clone(), Arc::clone(&record));
        record
    }

    /// Parses `csv` and stores it under a fresh id.
    pub fn create(&self, name: Option<String>, csv: &str) -> hexblur::Result<Arc<DatasetRecord>> {
        let (dataset, _) = read_points_csv(csv.as_bytes(), false)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let name = name.unwrap_or_else(|| id.clone());
        if let Some(dir) = &self.data_dir {
            let body = format!("# name={}\n{csv}", name.replace('\n', " "));
            fs::write(dir.join(format!("{id}.csv")), body)?;
        }
        Ok(self.insert(DatasetRecord {
            id,
            name,
            point_count: dataset.len(),
            bounds: dataset.bounds(),
            created_at: now_secs(),
            dataset,
        }))
    }

    pub fn get(&self, id: &str) -> Option<Arc<DatasetRecord>> {
        self.datasets
            .read()
            .expect("dataset store poisoned")
            .get(id)
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.datasets.read().expect("dataset store poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
