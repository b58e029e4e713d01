// SPDX-License-Identifier: Apache-2.0

#include "ks1d/cli.hpp"

int main(int argc, char **argv)
{
  return ks1d::run_cli(argc, argv);
}
