// Copyright 2026 The lbtransport Authors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(lbtransport::cli::run(std::env::args_os()));
}
