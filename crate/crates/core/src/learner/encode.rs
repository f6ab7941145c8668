use ndarray::Array1;

use crate::ecosystem::{GenreId, Observation};

/// Width of one creator's row: a one-hot over genres plus `NO_ITEM`,
/// followed by the trust estimate.
pub fn row_width(genres: usize) -> usize {
    genres + 2
}

/// Flattens an observation into the network input, row-major by creator.
pub fn encode(obs: &Observation, genres: usize) -> Array1<f64> {
    let width = row_width(genres);
    let mut out = Array1::zeros(obs.created.len() * width);
    for (i, (created, &trust)) in obs.created.iter().zip(&obs.trust).enumerate() {
        let slot = created.map_or(genres, GenreId::index);
        out[i * width + slot] = 1.0;
        out[i * width + genres + 1] = trust;
    }
    out
}

/// Recovers the genre component of an encoded state.
pub fn decode_genres(state: &Array1<f64>, genres: usize) -> Vec<Option<GenreId>> {
    let width = row_width(genres);
    state
        .as_slice()
        .expect("contiguous state")
        .chunks(width)
        .map(|row| {
            let hot = row[..=genres].iter().position(|&v| v == 1.0).expect("one-hot row");
            (hot < genres).then_some(GenreId(hot))
        })
        .collect()
}
