// Generated by gen_ber_reference.py; do not edit.
#pragma once

namespace fedlam_test {

struct BerReference {
  int m;
  double es_n0;
  double ber;
};

inline constexpr BerReference kBerReference[] = {
    {2, 0.01, 0.44376854199085755},
    {2, 0.01832980710832436, 0.42407986403194957},
    {2, 0.03359818286283782, 0.39773174034710681},
    {2, 0.061584821106602634, 0.36281093121373571},
    {2, 0.1128837891684689, 0.31734001025082875},
    {2, 0.20691380811147897, 0.26001656200484287},
    {2, 0.37926901907322497, 0.19189321371551819},
    {2, 0.6951927961775606, 0.11916999655779767},
    {2, 1.2742749857031337, 0.055197766058542037},
    {2, 2.3357214690901222, 0.015334075269885852},
    {2, 4.281332398719394, 0.0017156340400875171},
    {2, 7.847599703514613, 3.7206397349097976e-5},
    {2, 14.384498882876628, 4.0773032637710679e-8},
    {2, 26.366508987303583, 1.9105650255278969e-13},
    {2, 48.32930238571753, 4.1186801658556704e-23},
    {2, 88.58667904100827, 1.0036618152316707e-40},
    {2, 162.37767391887218, 6.6692498403443383e-73},
    {2, 297.6351441631318, 8.9438744855577626e-132},
    {2, 545.5594781168519, 1.4063907468485451e-239},
    {2, 1000.0, 0.0 /* 4.5258e-437, below double range */},
    {4, 0.01, 0.46017216272297102},
    {4, 0.01832980710832436, 0.44615270669957682},
    {4, 0.03359818286283782, 0.42728207390571041},
    {4, 0.061584821106602634, 0.40200418804728746},
    {4, 0.1128837891684689, 0.36844228471087177},
    {4, 0.20691380811147897, 0.32459857937621923},
    {4, 0.37926901907322497, 0.26899735239133547},
    {4, 0.6951927961775606, 0.20220185717328342},
    {4, 1.2742749857031337, 0.12948311244625039},
    {4, 2.3357214690901222, 0.063218199545736958},
    {4, 4.281332398719394, 0.01926656555973206},
    {4, 7.847599703514613, 0.0025444113294061611},
    {4, 14.384498882876628, 7.4512016627030323e-5},
    {4, 26.366508987303583, 1.4119740299776565e-7},
    {4, 48.32930238571753, 1.8016370257608472e-12},
    {4, 88.58667904100827, 2.4327733421697431e-21},
    {4, 162.37767391887218, 1.7105997696995496e-37},
    {4, 297.6351441631318, 5.3947397998068307e-67},
    {4, 545.5594781168519, 5.8205111699808111e-121},
    {4, 1000.0, 8.979163924003631e-220},
    {8, 0.01, 0.5},
    {8, 0.01832980710832436, 0.5},
    {8, 0.03359818286283782, 0.5},
    {8, 0.061584821106602634, 0.5},
    {8, 0.1128837891684689, 0.5},
    {8, 0.20691380811147897, 0.45261271582869603},
    {8, 0.37926901907322497, 0.3866455842790213},
    {8, 0.6951927961775606, 0.30926640000104906},
    {8, 1.2742749857031337, 0.22716360200796419},
    {8, 2.3357214690901222, 0.15133880551337283},
    {8, 4.281332398719394, 0.08988571818350499},
    {8, 7.847599703514613, 0.043250115136539129},
    {8, 14.384498882876628, 0.013371054509330471},
    {8, 26.366508987303583, 0.0018178219862400878},
    {8, 48.32930238571753, 5.6106673832024908e-5},
    {8, 88.58667904100827, 1.1700753612776151e-7},
    {8, 162.37767391887218, 1.7788152841799472e-12},
    {8, 297.6351441631318, 3.3105210740631023e-21},
    {8, 545.5594781168519, 4.1904725217978456e-37},
    {8, 1000.0, 3.8818563815672709e-66},
    {16, 0.01, 0.5},
    {16, 0.01832980710832436, 0.5},
    {16, 0.03359818286283782, 0.5},
    {16, 0.061584821106602634, 0.5},
    {16, 0.1128837891684689, 0.5},
    {16, 0.20691380811147897, 0.5},
    {16, 0.37926901907322497, 0.5},
    {16, 0.6951927961775606, 0.47620573597397507},
    {16, 1.2742749857031337, 0.35809417871962919},
    {16, 2.3357214690901222, 0.25236261276446049},
    {16, 4.281332398719394, 0.17279337017989152},
    {16, 7.847599703514613, 0.11710269297632146},
    {16, 14.384498882876628, 0.074566947308709285},
    {16, 26.366508987303583, 0.039156553312680313},
    {16, 48.32930238571753, 0.013776730872243812},
    {16, 88.58667904100827, 0.002352563512341285},
    {16, 162.37767391887218, 0.00010964214126501371},
    {16, 297.6351441631318, 4.843537447451649e-7},
    {16, 545.5594781168519, 2.9045080408496288e-11},
    {16, 1000.0, 6.6719187636866657e-19},
};

}  // namespace fedlam_test
