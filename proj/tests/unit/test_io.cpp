#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "lsfem/assembly.hpp"
#include "lsfem/errors.hpp"
#include "lsfem/io.hpp"
#include "support.hpp"

using namespace lsfem;

TEST(FormatNumber, Spelling) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(1e-20), "1e-20");
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Csv, QuotingAndLineEndings) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_escape("two\nlines"), "\"two\nlines\"");
  CsvTable t({"name", "value"});
  t.add_row({"x,y", "1"});
  t.add_row({"z", ""});
  std::ostringstream out;
  t.write(out);
  EXPECT_EQ(out.str(), "name,value\r\n\"x,y\",1\r\nz,\r\n");
  EXPECT_THROW(t.add_row({"only one"}), InvalidArgument);
}

TEST(Vtk, StructureMatchesMesh) {
  const MeshPtr m = lsfem::testing::square(2);
  VtkCellData d;
  d.scalars["u"] = std::vector<double>(static_cast<std::size_t>(m->num_triangles()), 1.0);
  d.vectors["sigma"] = std::vector<Vec2>(static_cast<std::size_t>(m->num_triangles()), Vec2{1.0, 2.0});
  std::ostringstream out;
  write_vtk(out, *m, d);
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("# vtk DataFile Version", 0), 0u);
  EXPECT_NE(s.find("DATASET UNSTRUCTURED_GRID"), std::string::npos);
  EXPECT_NE(s.find("POINTS 9 double"), std::string::npos);
  EXPECT_NE(s.find("CELLS 8 32"), std::string::npos);
  EXPECT_NE(s.find("CELL_DATA 8"), std::string::npos);
  EXPECT_NE(s.find("SCALARS u double 1"), std::string::npos);
  EXPECT_NE(s.find("VECTORS sigma double"), std::string::npos);
  EXPECT_NE(s.find("1 2 0\n"), std::string::npos);
}

TEST(Vtk, FieldCellData) {
  const MeshPtr m = lsfem::testing::square(3);
  DiscreteFields f;
  f.sigma = interpolate(build_space(m, SpaceKind::RT0_N), VectorFn([](const Point&) { return Vec2{2.0, -1.0}; }));
  f.u = Field(build_space(m, SpaceKind::CR_D));
  const VtkCellData d = cell_data(f);
  ASSERT_TRUE(d.vectors.count("sigma"));
  for (const Vec2& v : d.vectors.at("sigma")) {
    EXPECT_NEAR(v.x, 2.0, 1e-13);
    EXPECT_NEAR(v.y, -1.0, 1e-13);
  }
  EXPECT_TRUE(d.scalars.count("u"));
  EXPECT_FALSE(d.vectors.count("phi"));
}

TEST(MatrixMarket, CoordinateAndArray) {
  const SparseMatrix a = SparseMatrix::from_triplets(2, 2, {{0, 0, 2.0}, {1, 0, -0.5}});
  std::ostringstream out;
  write_matrix_market(out, a);
  EXPECT_EQ(out.str(), "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 2\n2 1 -0.5\n");
  std::ostringstream vec;
  write_matrix_market(vec, std::vector<double>{1.0, 0.25});
  EXPECT_EQ(vec.str(), "%%MatrixMarket matrix array real general\n2 1\n1\n0.25\n");
}
