//! Published training trajectories of three chest X-ray classifiers
//! (DenseNet201, InceptionV3, ResNet50V2), encoded for detector replay.
//!
//! Gold-list sizes are not published per checkpoint. The fixtures use the full
//! test supports (317 Normal, 855 Pneumonia) except where the recorded
//! accuracy equals the share of a single class, i.e. every image was assigned
//! to that class and the other class's gold list is empty.

use std::path::{Path, PathBuf};

use crate::cam::CamMethod;
use crate::error::Result;
use crate::io::{write_cscore_report, write_epoch_metrics, ClassKey, EpochMetrics, ScoreRow};
use crate::trajectory::{phase_of, DEFAULT_PHASE_BOUNDARY};

pub const NORMAL: usize = 0;
pub const PNEUMONIA: usize = 1;
pub const NORMAL_SUPPORT: usize = 317;
pub const PNEUMONIA_SUPPORT: usize = 855;

/// Epochs at which C-Scores were evaluated.
pub const CHECKPOINTS: [u32; 7] = [1, 5, 10, 15, 20, 25, 30];

/// Row order of the score tables.
pub const METHOD_ORDER: [CamMethod; 6] = [
    CamMethod::GradCam,
    CamMethod::GradCamPp,
    CamMethod::LayerCam,
    CamMethod::ScoreCam,
    CamMethod::EigenCam,
    CamMethod::MsGradCamPp,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    DenseNet201,
    InceptionV3,
    ResNet50V2,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [
        Architecture::DenseNet201,
        Architecture::InceptionV3,
        Architecture::ResNet50V2,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            Architecture::DenseNet201 => "densenet201",
            Architecture::InceptionV3 => "inceptionv3",
            Architecture::ResNet50V2 => "resnet50v2",
        }
    }

    fn column(self) -> usize {
        self as usize
    }

    /// Published E30−E20 net changes of the five single-layer methods
    /// (GradCAM, GradCAM++, LayerCAM, ScoreCAM, EigenCAM) and their stated average.
    pub fn published_deltas(self) -> ([f64; 5], f64) {
        match self {
            Architecture::DenseNet201 => ([0.610, 0.321, 0.312, 0.250, 0.211], 0.267),
            Architecture::InceptionV3 => ([0.048, 0.277, 0.195, 0.380, 0.096], 0.158),
            Architecture::ResNet50V2 => ([-0.015, -0.115, -0.165, -0.612, -0.193], -0.162),
        }
    }
}

/// epoch, then (AUC, accuracy) for DenseNet201, InceptionV3, ResNet50V2.
#[rustfmt::skip]
const EPOCHS: [(u32, [(f64, f64); 3]); 30] = [
    (1,  [(0.9184, 0.6160), (0.8705, 0.6613), (0.9582, 0.8148)]),
    (2,  [(0.9656, 0.8464), (0.9310, 0.6433), (0.9760, 0.9420)]),
    (3,  [(0.9657, 0.4548), (0.9509, 0.6997), (0.9807, 0.8242)]),
    (4,  [(0.9804, 0.9096), (0.9542, 0.8635), (0.9800, 0.9471)]),
    (5,  [(0.9848, 0.9403), (0.9592, 0.7833), (0.9876, 0.9582)]),
    (6,  [(0.9855, 0.9258), (0.9626, 0.8046), (0.9885, 0.9556)]),
    (7,  [(0.9859, 0.9497), (0.9602, 0.8549), (0.9859, 0.9582)]),
    (8,  [(0.9865, 0.9044), (0.9641, 0.8413), (0.9888, 0.9079)]),
    (9,  [(0.9882, 0.9480), (0.9633, 0.8763), (0.9894, 0.9471)]),
    (10, [(0.9886, 0.9488), (0.9664, 0.8686), (0.9892, 0.9352)]),
    (11, [(0.9889, 0.9488), (0.9673, 0.8720), (0.9908, 0.9505)]),
    (12, [(0.9890, 0.9514), (0.9672, 0.8703), (0.9909, 0.9428)]),
    (13, [(0.9893, 0.9531), (0.9675, 0.8899), (0.9895, 0.9590)]),
    (14, [(0.9893, 0.9480), (0.9661, 0.8823), (0.9900, 0.8439)]),
    (15, [(0.9903, 0.9079), (0.9679, 0.8891), (0.9902, 0.9497)]),
    (16, [(0.9890, 0.9573), (0.9661, 0.8925), (0.9893, 0.9206)]),
    (17, [(0.9901, 0.9573), (0.9678, 0.8788), (0.9901, 0.9249)]),
    (18, [(0.9902, 0.9590), (0.9676, 0.8746), (0.9891, 0.9462)]),
    (19, [(0.9899, 0.9514), (0.9684, 0.8882), (0.9888, 0.9514)]),
    (20, [(0.9902, 0.9480), (0.9680, 0.8933), (0.9898, 0.9420)]),
    (21, [(0.9842, 0.2773), (0.9297, 0.8430), (0.9876, 0.7986)]),
    (22, [(0.9852, 0.2705), (0.9648, 0.7295), (0.9807, 0.4249)]),
    (23, [(0.9891, 0.2705), (0.9836, 0.2875), (0.0287, 0.7099)]),
    (24, [(0.9910, 0.8370), (0.9892, 0.6920), (0.9885, 0.4445)]),
    (25, [(0.9867, 0.7295), (0.9902, 0.9676), (0.9902, 0.7875)]),
    (26, [(0.9844, 0.7295), (0.9930, 0.3823), (0.9868, 0.8234)]),
    (27, [(0.9931, 0.9693), (0.9925, 0.8746), (0.9933, 0.9539)]),
    (28, [(0.9927, 0.9676), (0.9949, 0.9761), (0.9938, 0.7491)]),
    (29, [(0.9941, 0.8677), (0.9943, 0.9462), (0.9947, 0.9701)]),
    (30, [(0.9945, 0.9420), (0.9949, 0.9462), (0.1034, 0.7295)]),
];

type Table = [[f64; 7]; 6];

#[rustfmt::skip]
const GLOBAL: [Table; 3] = [
    [
        [0.113, 0.168, 0.170, 0.198, 0.197, 0.744, 0.807],
        [0.358, 0.461, 0.546, 0.566, 0.549, 0.916, 0.870],
        [0.403, 0.479, 0.569, 0.583, 0.559, 0.915, 0.871],
        [0.460, 0.563, 0.622, 0.632, 0.630, 0.933, 0.880],
        [0.635, 0.634, 0.635, 0.636, 0.635, 0.908, 0.846],
        [0.322, 0.380, 0.439, 0.460, 0.445, 0.644, 0.618],
    ],
    [
        [0.169, 0.242, 0.209, 0.195, 0.196, 0.875, 0.244],
        [0.475, 0.508, 0.492, 0.484, 0.485, 0.808, 0.762],
        [0.567, 0.583, 0.572, 0.567, 0.568, 0.802, 0.763],
        [0.392, 0.386, 0.383, 0.381, 0.379, 0.790, 0.759],
        [0.758, 0.759, 0.758, 0.757, 0.756, 0.896, 0.852],
        [0.419, 0.417, 0.417, 0.415, 0.419, 0.659, 0.654],
    ],
    [
        [0.422, 0.387, 0.573, 0.400, 0.385, 0.272, 0.370],
        [0.320, 0.613, 0.642, 0.607, 0.593, 0.676, 0.478],
        [0.513, 0.667, 0.681, 0.662, 0.654, 0.675, 0.489],
        [0.517, 0.698, 0.629, 0.621, 0.612, 0.014, 0.000],
        [0.589, 0.685, 0.693, 0.692, 0.688, 0.678, 0.495],
        [0.313, 0.508, 0.527, 0.508, 0.507, 0.533, 0.409],
    ],
];

/// `[architecture][class]`, class 0 = Normal, 1 = Pneumonia.
#[rustfmt::skip]
const PER_CLASS: [[Table; 2]; 3] = [
    [
        [
            [0.159, 0.593, 0.606, 0.663, 0.664, 0.000, 0.924],
            [0.424, 0.669, 0.694, 0.728, 0.718, 0.000, 0.918],
            [0.471, 0.672, 0.696, 0.729, 0.716, 0.000, 0.919],
            [0.539, 0.621, 0.688, 0.738, 0.714, 0.000, 0.907],
            [0.680, 0.682, 0.688, 0.689, 0.688, 0.000, 0.895],
            [0.370, 0.504, 0.535, 0.586, 0.573, 0.000, 0.674],
        ],
        [
            [0.078, 0.007, 0.002, 0.004, 0.014, 0.744, 0.761],
            [0.310, 0.382, 0.490, 0.498, 0.483, 0.916, 0.851],
            [0.352, 0.406, 0.520, 0.522, 0.498, 0.915, 0.852],
            [0.401, 0.541, 0.597, 0.587, 0.597, 0.933, 0.869],
            [0.603, 0.615, 0.615, 0.614, 0.614, 0.908, 0.826],
            [0.286, 0.333, 0.402, 0.408, 0.395, 0.644, 0.596],
        ],
    ],
    [
        [
            [0.047, 0.288, 0.380, 0.317, 0.335, 0.840, 0.847],
            [0.469, 0.542, 0.536, 0.516, 0.509, 0.872, 0.851],
            [0.613, 0.642, 0.631, 0.620, 0.623, 0.866, 0.852],
            [0.292, 0.332, 0.303, 0.286, 0.286, 0.845, 0.852],
            [0.770, 0.777, 0.775, 0.774, 0.774, 0.938, 0.922],
            [0.393, 0.407, 0.407, 0.400, 0.396, 0.753, 0.759],
        ],
        [
            [0.244, 0.218, 0.138, 0.146, 0.140, 0.887, 0.008],
            [0.479, 0.491, 0.474, 0.471, 0.475, 0.785, 0.728],
            [0.539, 0.553, 0.548, 0.546, 0.546, 0.779, 0.728],
            [0.453, 0.414, 0.416, 0.419, 0.417, 0.770, 0.723],
            [0.750, 0.750, 0.750, 0.750, 0.749, 0.881, 0.825],
            [0.435, 0.422, 0.421, 0.421, 0.429, 0.626, 0.613],
        ],
    ],
    [
        [
            [0.333, 0.095, 0.573, 0.455, 0.481, 0.798, 0.000],
            [0.364, 0.656, 0.662, 0.643, 0.634, 0.798, 0.000],
            [0.517, 0.715, 0.711, 0.696, 0.688, 0.798, 0.000],
            [0.508, 0.882, 0.652, 0.645, 0.649, 0.041, 0.000],
            [0.593, 0.745, 0.727, 0.728, 0.723, 0.802, 0.000],
            [0.333, 0.495, 0.518, 0.508, 0.508, 0.595, 0.000],
        ],
        [
            [0.463, 0.493, 0.572, 0.379, 0.348, 0.000, 0.370],
            [0.300, 0.598, 0.635, 0.593, 0.578, 0.613, 0.478],
            [0.511, 0.650, 0.669, 0.648, 0.640, 0.611, 0.489],
            [0.521, 0.632, 0.621, 0.611, 0.597, 0.000, 0.000],
            [0.587, 0.664, 0.680, 0.678, 0.675, 0.614, 0.495],
            [0.303, 0.512, 0.530, 0.507, 0.507, 0.500, 0.409],
        ],
    ],
];

pub fn epoch_metrics(arch: Architecture) -> Vec<EpochMetrics> {
    EPOCHS
        .iter()
        .map(|&(epoch, cols)| {
            let (auc, accuracy) = cols[arch.column()];
            EpochMetrics {
                epoch,
                phase: phase_of(epoch, DEFAULT_PHASE_BOUNDARY),
                auc,
                accuracy,
            }
        })
        .collect()
}

fn accuracy_at(arch: Architecture, epoch: u32) -> f64 {
    EPOCHS
        .iter()
        .find(|(e, _)| *e == epoch)
        .map(|(_, cols)| cols[arch.column()].1)
        .expect("fixture epoch")
}

/// Gold-list sizes (Normal, Pneumonia) at a checkpoint.
pub fn gold_sizes(arch: Architecture, epoch: u32) -> (usize, usize) {
    let total = (NORMAL_SUPPORT + PNEUMONIA_SUPPORT) as f64;
    let all_pneumonia = format!("{:.4}", PNEUMONIA_SUPPORT as f64 / total);
    let all_normal = format!("{:.4}", NORMAL_SUPPORT as f64 / total);
    let acc = format!("{:.4}", accuracy_at(arch, epoch));
    if acc == all_pneumonia {
        (0, PNEUMONIA_SUPPORT)
    } else if acc == all_normal {
        (NORMAL_SUPPORT, 0)
    } else {
        (NORMAL_SUPPORT, PNEUMONIA_SUPPORT)
    }
}

pub fn checkpoint_id(epoch: u32) -> String {
    format!("E{epoch}")
}

/// Per-class and global rows for every method and checkpoint.
pub fn score_rows(arch: Architecture) -> Vec<ScoreRow> {
    let a = arch.column();
    let mut rows = Vec::new();
    for (col, &epoch) in CHECKPOINTS.iter().enumerate() {
        let (n0, n1) = gold_sizes(arch, epoch);
        for (m, &method) in METHOD_ORDER.iter().enumerate() {
            let row = |class, cscore, gold_size| ScoreRow {
                checkpoint: checkpoint_id(epoch),
                method,
                class,
                cscore,
                gold_size,
                degenerate_pairs: 0,
                empty_gold: class != ClassKey::Global && gold_size == 0,
                singleton_gold: class != ClassKey::Global && gold_size == 1,
                all_empty: class == ClassKey::Global && gold_size == 0,
            };
            rows.push(row(ClassKey::Class(NORMAL), PER_CLASS[a][NORMAL][m][col], n0));
            rows.push(row(ClassKey::Class(PNEUMONIA), PER_CLASS[a][PNEUMONIA][m][col], n1));
            rows.push(row(ClassKey::Global, GLOBAL[a][m][col], n0 + n1));
        }
    }
    rows
}

/// Published global score, for direct comparisons in tests.
pub fn global_score(arch: Architecture, method: CamMethod, epoch: u32) -> Option<f64> {
    let m = METHOD_ORDER.iter().position(|&x| x == method)?;
    let col = CHECKPOINTS.iter().position(|&e| e == epoch)?;
    Some(GLOBAL[arch.column()][m][col])
}

/// Write `<slug>_epoch_metrics.csv` and `<slug>_scores.csv` for every
/// architecture into `dir`.
pub fn write_all(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| crate::error::Error::io(dir, e))?;
    let mut written = Vec::new();
    for arch in Architecture::ALL {
        let metrics = dir.join(format!("{}_epoch_metrics.csv", arch.slug()));
        write_epoch_metrics(&epoch_metrics(arch), &metrics)?;
        let scores = dir.join(format!("{}_scores.csv", arch.slug()));
        write_cscore_report(&score_rows(arch), &scores)?;
        written.push(metrics);
        written.push(scores);
    }
    Ok(written)
}
